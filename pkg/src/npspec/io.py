"""File formats: matrix container, eigenvalue/counting CSV, reports.

NPMAT v1 container: a single header line

    NPMAT v1 <rows> <cols> <real|complex>

followed by the entries in row-major order as whitespace-separated
decimal literals; a complex entry is two consecutive tokens (real then
imaginary part).  Writers use fixed repr-precision formatting so a
rerun with identical inputs produces identical bytes.
"""

import json

import numpy as np

_FMT = "%.17g"


def write_npmat(path, mat):
    mat = np.asarray(mat)
    if mat.ndim != 2:
        raise ValueError("NPMAT stores matrices only")
    kind = "complex" if np.iscomplexobj(mat) else "real"
    with open(path, "w") as f:
        f.write("NPMAT v1 %d %d %s\n" % (mat.shape[0], mat.shape[1], kind))
        for row in mat:
            if kind == "complex":
                toks = []
                for v in row:
                    toks.append(_FMT % v.real)
                    toks.append(_FMT % v.imag)
            else:
                toks = [_FMT % v for v in row]
            f.write(" ".join(toks) + "\n")


def read_npmat(path):
    with open(path) as f:
        header = f.readline().split()
        if len(header) != 5 or header[0] != "NPMAT" or header[1] != "v1":
            raise ValueError("not an NPMAT v1 file")
        rows, cols, kind = int(header[2]), int(header[3]), header[4]
        if kind not in ("real", "complex"):
            raise ValueError("unknown NPMAT entry kind %r" % kind)
        data = f.read().split()
    per = 2 if kind == "complex" else 1
    if len(data) != rows * cols * per:
        raise ValueError("NPMAT token count mismatch")
    vals = np.array(data, dtype=float)
    if kind == "complex":
        vals = vals[0::2] + 1j * vals[1::2]
    return vals.reshape(rows, cols)


def write_eigenvalues_csv(path, values):
    """CSV with header index,value; indices are 1-based."""
    with open(path, "w") as f:
        f.write("index,value\n")
        for i, v in enumerate(np.asarray(values).ravel(), start=1):
            f.write("%d,%s\n" % (i, _FMT % v))


def read_eigenvalues_csv(path):
    with open(path) as f:
        header = f.readline().strip()
        if header != "index,value":
            raise ValueError("not an eigenvalue CSV")
        return np.array([float(line.split(",")[1]) for line in f if line.strip()])


def write_counting_csv(path, records):
    """CSV with header tau,n_plus,n_minus,root from counting records."""
    with open(path, "w") as f:
        f.write("tau,n_plus,n_minus,root\n")
        for rec in records:
            root = rec["root"]
            for t, npl, nmi in zip(rec["tau"], rec["n_plus"], rec["n_minus"]):
                f.write(
                    "%s,%d,%d,%s\n" % (_FMT % t, int(npl), int(nmi), _FMT % root)
                )


def read_counting_csv(path):
    """Counting records grouped by root, in file order."""
    with open(path) as f:
        header = f.readline().strip()
        if header != "tau,n_plus,n_minus,root":
            raise ValueError("not a counting CSV")
        rows = [line.strip().split(",") for line in f if line.strip()]
    records = []
    current = None
    for t, npl, nmi, root in rows:
        root = float(root)
        if current is None or current["root"] != root:
            current = {"root": root, "tau": [], "n_plus": [], "n_minus": []}
            records.append(current)
        current["tau"].append(float(t))
        current["n_plus"].append(int(npl))
        current["n_minus"].append(int(nmi))
    for rec in records:
        rec["tau"] = np.array(rec["tau"])
        rec["n_plus"] = np.array(rec["n_plus"])
        rec["n_minus"] = np.array(rec["n_minus"])
    return records


def write_report_json(path, reports):
    """Asymptotics reports as a deterministic JSON document."""
    payload = {"reports": [r.to_dict() for r in reports]}
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def read_report_json(path):
    with open(path) as f:
        return json.load(f)
