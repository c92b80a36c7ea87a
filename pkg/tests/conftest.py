from pathlib import Path

import pytest

from fiscalforge.data_ingest import FinancialSeries, QuarterRecord

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURE_CSV = REPO_ROOT / "fixtures" / "synthetic_quarters.csv"
DATA_DIR = Path(__file__).resolve().parent / "data"


def make_series(rows, start_year=2000):
    """Build a FinancialSeries from (rnd, sga, net_income) tuples."""
    records = []
    for i, (rnd, sga, net) in enumerate(rows):
        period = f"{start_year + i // 4}-Q{i % 4 + 1}"
        records.append(QuarterRecord(period, float(rnd), float(sga), float(net)))
    return FinancialSeries(tuple(records))


@pytest.fixture(scope="session")
def fixture_series():
    from fiscalforge.data_ingest import load_series

    return load_series(FIXTURE_CSV)
