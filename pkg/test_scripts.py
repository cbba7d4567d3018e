"""pytest collection wiring: runs each scripts/script_*.py exactly as tests.py does."""
import os

import pytest

SCRIPTS_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'scripts')
SCRIPT_NAMES = sorted(name for name in os.listdir(SCRIPTS_DIR)
                      if name.startswith('script_') and name.endswith('.py'))


@pytest.mark.parametrize('file_name', SCRIPT_NAMES)
def test_script(file_name, monkeypatch):
    monkeypatch.chdir(SCRIPTS_DIR)
    with open(file_name, 'r', encoding='utf-8') as script:
        exec(compile(script.read(), file_name, 'exec'), {'__name__': '__main__', '__file__': file_name})
