import pytest

from mixtag.lexicons import Lexicon, ResourceBundle, default_emoticons
from mixtag.corpus import LANGUAGES


@pytest.fixture
def bundle():
    """Tiny hand-made resources covering the ambiguous 'take' case."""
    per_language = {lang: Lexicon.empty(lang) for lang in LANGUAGES}
    per_language["en"] = Lexicon("en", frozenset({"take", "this", "mama", "hello"}))
    per_language["bn"] = Lexicon("bn", frozenset({"ami", "take", "boli", "valo"}))
    per_language["hi"] = Lexicon("hi", frozenset({"pyaar", "pyar"}))
    return ResourceBundle(per_language, default_emoticons(), Lexicon("gazetteer", frozenset({"kolkata", "sachin"})))


# --- acceptance summary ---------------------------------------------------

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): exit criterion of the project")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    key = marker.args[0]
    failed = call.excinfo is not None and call.when in ("setup", "call")
    prev = _ACCEPTANCE.get(key, (marker.args[1], True))
    _ACCEPTANCE[key] = (prev[0], prev[1] and not failed)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE):
        title, ok = _ACCEPTANCE[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {key}. {title}")
