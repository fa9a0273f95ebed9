"""CSV output of sweep results."""
from __future__ import annotations

import contextlib
import csv
import math
from pathlib import Path

from .engine import BerRecord, SweepReport

COLUMNS = ("scheme", "snr_db", "bits", "bit_errors", "ber", "frames", "seed")


def _format_row(r: BerRecord) -> list[str]:
    return [r.scheme, repr(float(r.snr_db)), str(r.bits), str(r.bit_errors),
            f"{r.ber:.5e}", str(r.frames), str(r.master_seed)]


def _open(target):
    if hasattr(target, "write"):
        return contextlib.nullcontext(target)
    return open(Path(target), "w", newline="")


def emit_csv(report: SweepReport | list[BerRecord], target) -> None:
    """Write records to a path or an open text stream."""
    records = report.records if isinstance(report, SweepReport) else report
    with _open(target) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for r in records:
            writer.writerow(_format_row(r))


def read_csv(path) -> list[BerRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        records = []
        for row in reader:
            scheme, snr, bits, errors, ber, frames, seed = row
            rec = BerRecord(scheme=scheme, snr_db=float(snr), bits=int(bits),
                            bit_errors=int(errors), frames=int(frames), master_seed=int(seed))
            if f"{rec.ber:.5e}" != ber:
                raise ValueError(f"{path}: ber column {ber} inconsistent with counts")
            records.append(rec)
    return records


def emit_plot_data(report: SweepReport, path) -> None:
    """(scheme, snr_db, log10_ber) rows; points without errors are left out."""
    with _open(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("scheme", "snr_db", "log10_ber"))
        for r in report.records:
            if r.bit_errors:
                writer.writerow((r.scheme, repr(float(r.snr_db)), f"{math.log10(r.ber):.6f}"))
