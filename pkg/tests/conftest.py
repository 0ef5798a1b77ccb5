import pytest


def pytest_addoption(parser):
    parser.addoption(
        "--full-acceptance",
        action="store_true",
        default=False,
        help="run the n = 4 acceptance parameter set with the full sample counts (tens of minutes)",
    )


@pytest.fixture(scope="session")
def full_acceptance(request):
    return request.config.getoption("--full-acceptance")
