import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from helpers import ACCEPTANCE  # noqa: E402

TITLES = {
    1: "clique activity distribution",
    2: "backoff ordering combinatorics",
    3: "beta identity and KL bound",
    4: "direct static budget (clique family)",
    5: "hidden static budget (group family)",
    6: "hitting-set oracle equivalence",
    7: "s=1 counting equivalence",
    8: "conditional loss separation",
    9: "robust pipeline budgets",
    10: "geo scaling law",
    11: "experiment determinism",
}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, title in TITLES.items():
        if num in ACCEPTANCE:
            ok, detail = ACCEPTANCE[num]
            status = "PASS" if ok else "FAIL"
        else:
            status, detail = "NOT RUN", ""
        terminalreporter.write_line(f"[{status}] #{num:<2} {title}: {detail}")
