import numpy as np
import pytest

from ecoinfer.tabular import BINARY, Dataset, FeatureSpec, Schema

# One line per acceptance criterion, emitted after the test summary so the
# lines survive output capture.
acceptance_lines: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.write_line(line)


def small_schema(n_features=3, names=("PTT", "PT", "Plt")):
    return Schema(
        features=tuple(FeatureSpec(n) for n in names[:n_features]),
        outcome=FeatureSpec("Dead", positive_label="dead",
                            negative_label="alive"),
    )


def dataset_from_rows(schema, rows):
    rows = np.asarray(rows)
    cols = {name: rows[:, j] for j, name in enumerate(schema.column_names)}
    return Dataset(schema, cols)


@pytest.fixture
def trio_schema():
    return small_schema()


@pytest.fixture
def table_s1(trio_schema):
    # columns: PTT, PT, Plt, Dead
    return dataset_from_rows(trio_schema, [
        [1, 0, 1, 1],
        [0, 1, 0, 0],
        [0, 0, 1, 1],
        [0, 1, 1, 1],
    ])


@pytest.fixture
def table_s2(trio_schema):
    return dataset_from_rows(trio_schema, [
        [0, 0, 1, 1],
        [0, 1, 1, 1],
        [0, 0, 1, 1],
        [1, 1, 0, 0],
    ])


@pytest.fixture
def trauma_cohort_pt():
    """10,790 rows realizing the published PT-vs-death cell counts
    (579, 2415, 489, 7307)."""
    schema = Schema(features=(FeatureSpec("PT"),),
                    outcome=FeatureSpec("Dead", positive_label="dead",
                                        negative_label="alive"))
    pt = np.concatenate([np.zeros(579 + 2415, dtype=int),
                         np.ones(489 + 7307, dtype=int)])
    dead = np.concatenate([np.zeros(579, dtype=int), np.ones(2415, dtype=int),
                           np.zeros(489, dtype=int), np.ones(7307, dtype=int)])
    return Dataset(schema, {"PT": pt, "Dead": dead})
