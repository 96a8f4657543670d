import pytest

from helpers import OrderFactory
from marketsim.orderbook import OrderBook


@pytest.fixture
def book():
    return OrderBook()


@pytest.fixture
def make_order(book):
    return OrderFactory(book)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE

    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[n]
        terminalreporter.write_line(
            f"criterion {n:>2} {'PASS' if passed else 'FAIL'}: {title} ({detail})")
