"""
File I/O - UTF-8 reading with encoding diagnostics and atomic writes
"""

import json
import os
import shutil
import tempfile
from pathlib import Path

import chardet

from features.errors import ParseError
from utils.logger import get_logger


def detect_encoding(raw_data):
    """Best guess at the encoding of raw bytes"""
    result = chardet.detect(raw_data[:10000])
    encoding = result.get('encoding')
    if not encoding or result.get('confidence', 0) < 0.7:
        for test_encoding in ('utf-8', 'utf-16', 'cp1252', 'latin-1'):
            try:
                raw_data[:1000].decode(test_encoding)
                return test_encoding
            except UnicodeDecodeError:
                continue
        return 'unknown'
    return encoding


def read_text(file_path):
    """Read a UTF-8 text file with LF line endings"""
    path = Path(file_path)
    raw_data = path.read_bytes()
    try:
        text = raw_data.decode('utf-8')
    except UnicodeDecodeError as e:
        encoding = detect_encoding(raw_data)
        get_logger().log_file_operation("Read file", path, False, f"encoding {encoding}")
        raise ParseError(f"{path}: file looks like {encoding}, expected UTF-8 ({e.reason})") from e

    if text.startswith('\ufeff'):
        text = text[1:]
    get_logger().log_file_operation("Read file", path, True)
    return text.replace('\r\n', '\n').replace('\r', '\n')


def write_text_atomic(file_path, content):
    """Write text through a temporary file so readers never see a partial file"""
    path = Path(file_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    temp_file = None
    try:
        with tempfile.NamedTemporaryFile(
                mode='w',
                encoding='utf-8',
                newline='\n',
                delete=False,
                dir=path.parent,
                prefix=f".{path.name}.tmp"
        ) as f:
            f.write(content)
            temp_file = f.name

        shutil.move(temp_file, path)
    except Exception:
        if temp_file and os.path.exists(temp_file):
            try:
                os.unlink(temp_file)
            except OSError:
                pass
        get_logger().log_file_operation("Write file", path, False)
        raise

    get_logger().log_file_operation("Write file", path, True, f"{len(content)} chars")
    return path


def jsonl_text(rows):
    """One JSON object per line, keys in insertion order"""
    return ''.join(json.dumps(row, ensure_ascii=False) + '\n' for row in rows)


def write_json(file_path, data):
    return write_text_atomic(file_path, json.dumps(data, indent=2, ensure_ascii=False) + '\n')
