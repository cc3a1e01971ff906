"""CSV emission and plain-text table rendering.

Two machine-readable files describe a sweep:

  histograms.csv  one row per bin per cell with header
                  procedure,n,error_range,clamp,bin,mass_given_T,mass_given_F,lr
  summary.csv     one row per cell with header
                  procedure,n,error_range,clamp,dprime,brier,degenerate_count

Default-rule cells use the three atom labels 0.0/0.5/1.0 instead of the nine
bin labels.  Floats are written with repr (shortest round-trip), so reruns of
the same configuration produce byte-identical files.  The clamp column holds
"none" or "lo-hi" with %g formatting.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from .metrics import ATOM_BINS, ATOM_LABELS, BIN_LABELS
from .experiment import CellResult

HISTOGRAMS_CSV = "histograms.csv"
SUMMARY_CSV = "summary.csv"

HIST_HEADER = ("procedure", "n", "error_range", "clamp", "bin",
               "mass_given_T", "mass_given_F", "lr")
SUMMARY_HEADER = ("procedure", "n", "error_range", "clamp",
                  "dprime", "brier", "degenerate_count")


class ReportError(RuntimeError):
    """Raised when required cells are absent from the CSV files."""


def clamp_text(clamp) -> str:
    if clamp is None:
        return "none"
    return f"{clamp[0]:g}-{clamp[1]:g}"


def _fmt(x: float) -> str:
    return repr(float(x))


def _bin_rows(result: CellResult):
    """(label, mass_T, mass_F, lr) rows; atoms for the default rule."""
    if result.procedure.kind == "default":
        for label, k in zip(ATOM_LABELS, ATOM_BINS):
            yield label, result.hist_t[k], result.hist_f[k], result.lr[k]
    else:
        for k, label in enumerate(BIN_LABELS):
            yield label, result.hist_t[k], result.hist_f[k], result.lr[k]


def write_histograms_csv(results, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HIST_HEADER)
        for r in results:
            for label, m_t, m_f, lr in _bin_rows(r):
                writer.writerow([r.label, r.n, _fmt(r.error_range),
                                 clamp_text(r.clamp), label,
                                 _fmt(m_t), _fmt(m_f), _fmt(lr)])


def write_summary_csv(results, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_HEADER)
        for r in results:
            writer.writerow([r.label, r.n, _fmt(r.error_range), clamp_text(r.clamp),
                             _fmt(r.dprime), _fmt(r.brier), r.degenerate_count])


@dataclass
class HistRow:
    procedure: str
    n: int
    error_range: float
    clamp: str
    bin: str
    mass_t: float
    mass_f: float
    lr: float


def read_histograms_csv(path) -> list[HistRow]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != HIST_HEADER:
            raise ReportError(f"{path}: unexpected header {reader.fieldnames}")
        for rec in reader:
            rows.append(HistRow(rec["procedure"], int(rec["n"]),
                                float(rec["error_range"]), rec["clamp"], rec["bin"],
                                float(rec["mass_given_T"]), float(rec["mass_given_F"]),
                                float(rec["lr"])))
    return rows


def read_summary_csv(path) -> dict:
    """(procedure, n, error_range, clamp) -> {dprime, brier, degenerate_count}."""
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != SUMMARY_HEADER:
            raise ReportError(f"{path}: unexpected header {reader.fieldnames}")
        for rec in reader:
            key = (rec["procedure"], int(rec["n"]), float(rec["error_range"]),
                   rec["clamp"])
            out[key] = {"dprime": float(rec["dprime"]), "brier": float(rec["brier"]),
                        "degenerate_count": int(rec["degenerate_count"])}
    return out


class ResultTable:
    """Rendering view over parsed CSV rows."""

    def __init__(self, hist_rows, summary):
        self.masses = {}
        self.lrs = {}
        for row in hist_rows:
            key = (row.procedure, row.n, row.error_range, row.clamp)
            self.masses.setdefault(key, {})[row.bin] = row.mass_t
            self.lrs.setdefault(key, {})[row.bin] = row.lr
        self.summary = summary

    def cell_masses(self, procedure, n, error_range, clamp="none"):
        key = (procedure, n, error_range, clamp)
        if key not in self.masses:
            raise ReportError(f"required cell absent from histograms.csv: {key}")
        return self.masses[key]

    def cell_lrs(self, procedure, n, error_range, clamp="none"):
        key = (procedure, n, error_range, clamp)
        if key not in self.lrs:
            raise ReportError(f"required cell absent from histograms.csv: {key}")
        return self.lrs[key]

    def cell_dprime(self, procedure, n, error_range, clamp="none"):
        key = (procedure, n, error_range, clamp)
        if key not in self.summary:
            raise ReportError(f"required cell absent from summary.csv: {key}")
        return self.summary[key]["dprime"]


def load_result_table(directory) -> ResultTable:
    hist = read_histograms_csv(f"{directory}/{HISTOGRAMS_CSV}")
    summary = read_summary_csv(f"{directory}/{SUMMARY_CSV}")
    return ResultTable(hist, summary)


TABLE_ERRORS = (0.0, 0.4, 1.2)

TABLE_TITLES = {
    "t1": "t1  proper Bayes: average probability of posterior belief given H=T",
    "t2": "t2  proper Bayes with belief values clamped to [0.05, 0.95] (n=4)",
    "t3": "t3  simple naive Bayes: average probability of posterior belief given H=T",
    "t4": "t4  complex linear: average probability of posterior belief given H=T",
    "t5": "t5  simple linear: average probability of posterior belief given H=T",
    "t6": "t6  per-bin likelihood ratio P(bin | H=T) / P(bin | H=F) (n=4)",
    "t7": "t7  default rule: atom probabilities given H=T (n=4)",
}

_MASS_TABLE_PROCS = {"t1": "proper_bayes", "t3": "simple_naive",
                     "t4": "complex_linear", "t5": "simple_linear"}
TABLE_IDS = ("t1", "t2", "t3", "t4", "t5", "t6", "t7")


def _grid(title, row_labels, group_names, col_names, columns, first_width=18):
    """Aligned text table: column groups of equal width, 3-decimal cells."""
    width = 8
    lines = [title]
    group_line = " " * first_width
    for name in group_names:
        group_line += name.ljust(width * len(col_names) + 3)
    lines.append(group_line.rstrip())
    head = "posterior belief".ljust(first_width)
    for _ in group_names:
        for c in col_names:
            head += f"{c:>{width}}"
        head += "   "
    lines.append(head.rstrip())
    for i, label in enumerate(row_labels):
        line = label.ljust(first_width)
        for g in range(len(group_names)):
            for col in columns[g]:
                line += f"{col[i]:>{width}.3f}"
            line += "   "
        lines.append(line.rstrip())
    return "\n".join(lines) + "\n"


def render_table(table_id: str, table: ResultTable) -> str:
    """Render one of the t1..t7 layouts from parsed CSV data."""
    if table_id in _MASS_TABLE_PROCS:
        proc = _MASS_TABLE_PROCS[table_id]
        groups, names = [], []
        for n in (4, 7):
            cols = []
            for err in TABLE_ERRORS:
                masses = table.cell_masses(proc, n, err)
                col = [masses[b] for b in BIN_LABELS]
                col.append(table.cell_dprime(proc, n, err))
                cols.append(col)
            groups.append(cols)
            names.append(f"{'four' if n == 4 else 'seven'} evidence items")
        return _grid(TABLE_TITLES[table_id], list(BIN_LABELS) + ["d'"],
                     names, [f"{e:.2f}" for e in TABLE_ERRORS], groups)
    if table_id == "t2":
        clamp = "0.05-0.95"
        cols = []
        for err in TABLE_ERRORS:
            masses = table.cell_masses("proper_bayes", 4, err, clamp)
            col = [masses[b] for b in BIN_LABELS]
            col.append(table.cell_dprime("proper_bayes", 4, err, clamp))
            cols.append(col)
        return _grid(TABLE_TITLES["t2"], list(BIN_LABELS) + ["d'"],
                     ["four evidence items"], [f"{e:.2f}" for e in TABLE_ERRORS],
                     [cols])
    if table_id == "t6":
        procs = ("proper_bayes", "simple_naive", "strong_linear")
        groups, names = [], []
        for err in (0.0, 1.2):
            cols = []
            for proc in procs:
                lrs = table.cell_lrs(proc, 4, err)
                cols.append([lrs[b] for b in BIN_LABELS])
            groups.append(cols)
            names.append(f"error range {err:.1f}")
        return _grid(TABLE_TITLES["t6"], list(BIN_LABELS), names,
                     ["proper", "naive", "st.lin"], groups, first_width=18)
    if table_id == "t7":
        groups, names = [], []
        for label in ("default_t1.5", "default_t2.5"):
            cols = []
            for err in TABLE_ERRORS:
                masses = table.cell_masses(label, 4, err)
                cols.append([masses[a] for a in ATOM_LABELS])
            groups.append(cols)
            names.append(f"threshold {label.split('_t')[1]}")
        return _grid(TABLE_TITLES["t7"], list(ATOM_LABELS), names,
                     [f"{e:.2f}" for e in TABLE_ERRORS], groups)
    raise ReportError(f"unknown table id: {table_id} (expected one of {TABLE_IDS})")


def parse_rendered_table(text: str) -> dict[str, list[float]]:
    """Numeric rows of a rendered table, keyed by row label (test helper)."""
    out = {}
    for line in text.splitlines()[3:]:
        parts = line.split()
        if not parts:
            continue
        label = parts[0]
        try:
            out[label] = [float(p) for p in parts[1:]]
        except ValueError:
            continue
    return out
