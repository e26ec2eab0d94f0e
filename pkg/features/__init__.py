# features/__init__.py
"""
Core planlab modules: STRIPS semantics, planning files, C*-RASP, compilation,
built-in domains, dataset generation and theory checks
"""
