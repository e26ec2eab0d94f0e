"""
Build script - single-file planlab executable via PyInstaller

    python setup.py [--clean] [--test]
"""

import argparse
import json
import shutil
import subprocess
import sys
from pathlib import Path

import PyInstaller.__main__

APP_NAME = 'planlab'
APP_VERSION = '1.0.0'

ROOT = Path(__file__).resolve().parent
PACKAGES = ('features', 'ui', 'utils')

# Commands run against the built executable; each must exit 0
SMOKE_COMMANDS = (
    ('check-theory', 'flipflop', '--max-len', '6'),
    ('verify', 'flipflop', 'assets/domains/flipflop.pinst', 'assets/domains/flipflop-abe.pplan'),
    ('compile-crasp', 'colors-wf', '--explain', '1'),
)


def executable_path():
    suffix = '.exe' if sys.platform.startswith('win') else ''
    return ROOT / 'dist' / (APP_NAME + suffix)


def pyinstaller_args():
    separator = ';' if sys.platform.startswith('win') else ':'
    args = [
        '--onefile',
        '--console',
        f'--name={APP_NAME}',
        f'--distpath={ROOT / "dist"}',
        f'--workpath={ROOT / "build"}',
        f'--specpath={ROOT}',
        '--clean',
        '--noconfirm',
        '--noupx',
        f'--add-data={ROOT / "assets"}{separator}assets',
    ]
    args += [f'--hidden-import={name}' for name in PACKAGES + ('numpy', 'chardet')]
    args.append(str(ROOT / 'main.py'))
    return args


def build_executable():
    missing = [name for name in PACKAGES + ('assets',) if not (ROOT / name).exists()]
    if missing:
        print(f"Cannot build {APP_NAME}: missing {', '.join(missing)}")
        return False

    print(f"Building {APP_NAME} {APP_VERSION} for {sys.platform} with Python {sys.version.split()[0]}")
    try:
        PyInstaller.__main__.run(pyinstaller_args())
    except SystemExit as e:
        if e.code not in (0, None):
            print(f"PyInstaller exited with {e.code}")
            return False
    print(f"Executable: {executable_path()}")
    return True


def test_executable():
    """Run SMOKE_COMMANDS with the built binary from the repository root"""
    exe = executable_path()
    if not exe.exists():
        print(f"No executable at {exe}")
        return False

    for command in SMOKE_COMMANDS:
        result = subprocess.run([str(exe), *command], capture_output=True, text=True, cwd=ROOT)
        shown = ' '.join(command)
        if result.returncode != 0:
            print(f"FAILED {shown}: exit {result.returncode}\n{result.stderr}")
            return False
        try:
            json.loads(result.stdout)
        except json.JSONDecodeError:
            print(f"FAILED {shown}: stdout is not JSON")
            return False
        print(f"ok {shown}")
    return True


def clean_build_files():
    for path in (ROOT / 'build', ROOT / '__pycache__', ROOT / f'{APP_NAME}.spec'):
        if not path.exists():
            continue
        try:
            if path.is_dir():
                shutil.rmtree(path)
            else:
                path.unlink()
            print(f"Removed {path.name}")
        except OSError as e:
            print(f"Could not remove {path}: {e}")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=f'Build the {APP_NAME} executable')
    parser.add_argument('--clean', action='store_true', help='remove build artifacts afterwards')
    parser.add_argument('--test', action='store_true', help='smoke-test the built executable')
    options = parser.parse_args()

    ok = build_executable()
    if ok and options.test:
        ok = test_executable()
    if options.clean:
        clean_build_files()
    sys.exit(0 if ok else 1)
