"""Command-line front end: ``angmom {certify,freq,polytope,verify,p2}``.

Exit codes: 0 success, 1 negative finding, 2 usage or configuration error,
3 collision.  Random structures are drawn from the Haar measure on SO(2p).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from . import freqmap, horn, matkit, nbody, p2
from .freqmap import HermitianStructure, InertiaSpectrum

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2
EXIT_COLLISION = 3

FORMATS = ("json", "csv", "svg")
CONTOUR_LEVELS = 9
SVG_GRID = (91, 181)


class UsageError(Exception):
    pass


# -- serialization -------------------------------------------------------------


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def to_json(doc):
    # float repr is the shortest string that round-trips exactly
    return json.dumps(_plain(doc), indent=2) + "\n"


def _fmt(x):
    return repr(float(x))


def to_csv(header, rows):
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) if not isinstance(v, str) else v for v in row) for row in rows]
    return "\n".join(lines) + "\n"


# -- SVG -----------------------------------------------------------------------


class Svg:
    def __init__(self, width=640, height=640):
        self.width = width
        self.height = height
        self.parts = []

    def add(self, element):
        self.parts.append(element)

    def line(self, x1, y1, x2, y2, stroke="#000", width=1.0, cls=None):
        c = f' class="{cls}"' if cls else ""
        self.add(
            f'<line{c} x1="{x1:.3f}" y1="{y1:.3f}" x2="{x2:.3f}" y2="{y2:.3f}" '
            f'stroke="{stroke}" stroke-width="{width}"/>'
        )

    def polyline(self, pts, stroke="#000", fill="none", width=1.0, closed=False, cls=None):
        tag = "polygon" if closed else "polyline"
        c = f' class="{cls}"' if cls else ""
        coords = " ".join(f"{x:.3f},{y:.3f}" for x, y in pts)
        self.add(f'<{tag}{c} points="{coords}" stroke="{stroke}" fill="{fill}" stroke-width="{width}"/>')

    def text(self, x, y, s, size=12, anchor="start"):
        self.add(f'<text x="{x:.3f}" y="{y:.3f}" font-size="{size}" text-anchor="{anchor}">{escape(s)}</text>')

    def render(self, title):
        head = (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}">'
        )
        body = "\n".join(self.parts)
        return f'<?xml version="1.0" encoding="UTF-8"?>\n{head}\n<title>{escape(title)}</title>\n{body}\n</svg>\n'


class _Frame:
    """Affine map from data coordinates into an SVG box (y pointing up)."""

    def __init__(self, xs, ys, size, margin=50):
        self.x0, self.x1 = min(xs), max(xs)
        self.y0, self.y1 = min(ys), max(ys)
        span = max(self.x1 - self.x0, self.y1 - self.y0, 1e-12)
        self.scale = (size - 2 * margin) / span
        self.margin = margin
        self.size = size
        self.cx = 0.5 * (self.x0 + self.x1)
        self.cy = 0.5 * (self.y0 + self.y1)

    def __call__(self, x, y):
        return (
            self.size / 2 + (x - self.cx) * self.scale,
            self.size / 2 - (y - self.cy) * self.scale,
        )


def _plane_coords(nu):
    """Orthonormal coordinates on the hyperplane nu_1 + nu_2 + nu_3 = const."""
    nu = np.asarray(nu, dtype=float)
    return (nu[0] - nu[1]) / math.sqrt(2.0), (nu[0] + nu[1] - 2 * nu[2]) / math.sqrt(6.0)


def polytope_svg(s, poly, verts, labelled):
    svg = Svg()
    if s.p == 3:
        pts = [_plane_coords(v) for v in verts] + [_plane_coords(nu) for _, nu, _ in labelled]
        frame = _Frame([q[0] for q in pts], [q[1] for q in pts], svg.width)
        if len(verts) >= 3:
            c = np.mean([_plane_coords(v) for v in verts], axis=0)
            ordered = sorted(verts, key=lambda v: math.atan2(_plane_coords(v)[1] - c[1], _plane_coords(v)[0] - c[0]))
            svg.polyline([frame(*_plane_coords(v)) for v in ordered], fill="#ddd", closed=True, cls="polytope")
        elif len(verts) == 2:
            svg.polyline([frame(*_plane_coords(v)) for v in verts], cls="polytope")
        place = lambda nu: frame(*_plane_coords(nu))
    elif s.p == 2:
        xs = [v[0] for v in verts] + [nu[0] for _, nu, _ in labelled]
        frame = _Frame(xs, [0.0], svg.width)
        if len(verts) == 2:
            svg.polyline([frame(v[0], 0.0) for v in verts], width=3.0, cls="polytope")
        place = lambda nu: frame(nu[0], 0.0)
    else:
        frame = _Frame([0.0], [0.0], svg.width)
        place = lambda nu: frame(0.0, 0.0)
    for label, nu, pairing in labelled:
        x, y = place(nu)
        pairs = "".join(f"({a},{b})" for a, b in pairing)
        svg.add(
            f'<g class="basic-point" data-label="{label}" data-pairing="{pairs}">'
            f'<circle cx="{x:.3f}" cy="{y:.3f}" r="4" fill="#c00"/>'
            f'<text x="{x + 6:.3f}" y="{y - 6:.3f}" font-size="12">{label}</text></g>'
        )
    sig = ",".join(_fmt(v) for v in s.sigma)
    svg.text(10, 20, f"frequency polytope, sigma = ({sig})")
    return svg.render("frequency polytope")


def contour_svg(s, analysis):
    """Level curves of f on the (theta, phi) chart with the adapted great circles."""
    n_phi, n_theta = SVG_GRID
    phis, thetas, f, _, _ = p2.grid(s, n_phi, n_theta)
    svg = Svg(760, 420)
    left, top, w, h = 50.0, 30.0, 680.0, 340.0

    def at(phi, theta):
        return left + w * theta / p2.TWO_PI, top + h * (0.5 - phi / math.pi)

    svg.polyline([at(-math.pi / 2, 0), at(-math.pi / 2, p2.TWO_PI), at(math.pi / 2, p2.TWO_PI), at(math.pi / 2, 0)], closed=True)
    for level in contour_levels(analysis):
        for a, b in p2.contour_segments(phis, thetas, f, level):
            x1, y1 = at(*a)
            x2, y2 = at(*b)
            svg.line(x1, y1, x2, y2, stroke="#36c", cls="contour")
    # circles of adapted structures: phi = 0 and the meridians theta = 0, pi/2, pi, 3pi/2
    svg.line(*at(0.0, 0.0), *at(0.0, p2.TWO_PI), stroke="#c00", width=1.5, cls="great-circle")
    for k in range(5):
        svg.line(*at(-math.pi / 2, k * math.pi / 2), *at(math.pi / 2, k * math.pi / 2), stroke="#c00", width=1.5, cls="great-circle")
    for name, (phi, theta) in p2.CRITICAL_POINTS.items():
        x, y = at(phi, theta)
        svg.add(f'<g class="critical-point"><circle cx="{x:.3f}" cy="{y:.3f}" r="4" fill="#000"/>'
                f'<text x="{x + 6:.3f}" y="{y - 6:.3f}" font-size="12">{escape(name)}</text></g>')
    sig = ",".join(_fmt(v) for v in s.sigma)
    svg.text(left, 20, f"level curves of f = det Sigma, sigma = ({sig}); horizontal theta, vertical phi")
    return svg.render("level curves of f")


def contour_levels(analysis):
    lo, hi = analysis.fmin, analysis.fmax
    if hi - lo <= 1e-12 * max(1.0, abs(hi)):
        return []
    return [lo + (hi - lo) * k / (CONTOUR_LEVELS + 1) for k in range(1, CONTOUR_LEVELS + 1)]


# -- input handling --------------------------------------------------------------


def _parse_floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"could not parse number list {text!r}") from exc


def _parse_formats(text):
    fmts = [f.strip() for f in text.split(",") if f.strip()]
    bad = [f for f in fmts if f not in FORMATS]
    if bad or not fmts:
        raise UsageError(f"unknown output format(s) {bad}; choose from {', '.join(FORMATS)}")
    return fmts


def spectrum_from_configuration(c):
    """Inertia eigenvalues, with one zero appended when the dimension is odd."""
    vals = matkit.eigen_sym(nbody.inertia_tensor(c))[0]
    vals = np.clip(vals, 0.0, None)
    if vals.size % 2:
        vals = np.append(vals, 0.0)
    return InertiaSpectrum.from_values(vals)


def load_spectrum(args):
    if (args.sigma is None) == (args.input is None):
        raise UsageError("give exactly one of --sigma and --input")
    if args.sigma is not None:
        vals = _parse_floats(args.sigma)
        try:
            return InertiaSpectrum.from_values(vals)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    doc = _read_json(args.input)
    if isinstance(doc, dict) and "sigma" in doc:
        return InertiaSpectrum.from_values([float(x) for x in doc["sigma"]])
    return spectrum_from_configuration(nbody.load_configuration(doc))


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise nbody.ConfigurationFormatError(f"malformed JSON in {path}: {exc}") from exc


def _parse_pairing(text):
    pairs = []
    for chunk in text.replace(" ", "").split(","):
        if not chunk:
            continue
        parts = chunk.split("-")
        if len(parts) != 2:
            raise UsageError(f"bad pair {chunk!r}; use the form 1-2,3-4")
        pairs.append((int(parts[0]), int(parts[1])))
    return pairs


def structures_from_args(args, s):
    """List of (description, HermitianStructure) chosen by the J options."""
    chosen = [o for o in ("pairing", "phi", "structure", "random") if getattr(args, o) not in (None, False)]
    if args.theta is not None and "phi" not in chosen:
        chosen.append("phi")
    if len(chosen) > 1:
        raise UsageError("choose at most one of --pairing, --phi/--theta, --structure, --random")
    kind = chosen[0] if chosen else "standard"
    if kind == "standard":
        return [({"kind": "standard"}, HermitianStructure.standard(s.p))]
    if kind == "pairing":
        pairing = freqmap.validate_pairing(_parse_pairing(args.pairing), s.p)
        return [({"kind": "pairing", "pairing": [list(pr) for pr in pairing]}, freqmap.basic_structure(pairing))]
    if kind == "phi":
        if s.p != 2:
            raise UsageError("--phi/--theta need a spectrum with four entries")
        c = p2.SphereCoords(args.phi or 0.0, args.theta or 0.0)
        return [({"kind": "sphere", "phi": c.phi, "theta": c.theta}, p2.structure_at(c))]
    if kind == "structure":
        doc = _read_json(args.structure)
        try:
            if "R" in doc:
                j = HermitianStructure(np.asarray(doc["R"], dtype=float))
            else:
                j = freqmap.adapted_structure(np.asarray(doc["rho"], dtype=float), np.asarray(doc["P"], dtype=float))
        except (KeyError, TypeError) as exc:
            raise UsageError(f"structure file needs either R or rho and P: {exc}") from exc
        if j.p != s.p:
            raise UsageError(f"structure acts on R^{2 * j.p}, spectrum has {2 * s.p} entries")
        return [({"kind": "file", "path": str(args.structure)}, j)]
    reps = []
    for i in range(args.samples):
        rng = freqmap.chunk_rng(args.seed, i)
        reps.append(({"kind": "random", "seed": args.seed, "index": i},
                     HermitianStructure(matkit.haar_rotations(2 * s.p, 1, rng)[0])))
    return reps


def emit(args, name, payloads):
    """Print and/or write the requested formats; JSON goes to stdout by default."""
    fmts = [f for f in args.format if f in payloads]
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for f in fmts:
            (out / f"{name}.{f}").write_text(payloads[f])
    first = "json" if "json" in fmts else (fmts[0] if fmts else "json")
    if args.out is None or first == "json":
        sys.stdout.write(payloads[first])


# -- subcommands -----------------------------------------------------------------


def cmd_certify(args):
    if args.input is None:
        raise UsageError("certify needs --input CONFIG")
    c = nbody.load_configuration(_read_json(args.input))
    cert = nbody.certify(c, tol=args.tol if args.tol is not None else nbody.DEFAULT_CERTIFY_TOL)
    doc = {"n": c.n, "dim": c.dim, "tol": args.tol if args.tol is not None else nbody.DEFAULT_CERTIFY_TOL}
    doc.update(cert.to_dict())
    emit(args, "certify", {"json": to_json(doc)})
    return EXIT_OK if cert.status in ("central", "balanced") else EXIT_NEGATIVE


def cmd_freq(args):
    s = load_spectrum(args)
    rows = []
    for desc, j in structures_from_args(args, s):
        nu = freqmap.frequency_map(j, s)
        rows.append((desc, nu, abs(float(nu.sum()) - s.trace)))
    doc = {"sigma": s.sigma, "trace": s.trace, "seed": args.seed}
    if len(rows) == 1:
        doc.update({"structure": rows[0][0], "nu": rows[0][1], "trace_residual": rows[0][2]})
    else:
        doc.update({
            "samples": len(rows),
            "frequencies": [r[1] for r in rows],
            "max_trace_residual": max(r[2] for r in rows),
        })
    header = ["index"] + [f"nu_{k + 1}" for k in range(s.p)] + ["trace_residual"]
    csv_rows = [[str(i)] + list(r[1]) + [r[2]] for i, r in enumerate(rows)]
    emit(args, "freq", {"json": to_json(doc), "csv": to_csv(header, csv_rows)})
    return EXIT_OK


def cmd_polytope(args):
    s = load_spectrum(args)
    if s.p > horn.MAX_EXACT_P and not args.hull_only:
        raise UsageError(f"no exact inequality system for p = {s.p}; pass --hull-only")
    labelled = horn.labelled_basic_points(s) if s.p <= freqmap.MAX_PAIRING_P else []
    doc = {"p": s.p, "sigma": s.sigma, "trace": s.trace}
    payloads = {}
    if s.p <= horn.MAX_EXACT_P and not args.hull_only:
        poly = horn.frequency_polytope(s)
        verts = horn.vertices(poly)
        doc["inequalities"] = poly.to_dict()["inequalities"]
        doc["vertices"] = verts
        doc["partial_certificate"] = False
        payloads["svg"] = polytope_svg(s, poly, verts, labelled)
    else:
        pair = horn.fflp_split(s)
        doc["lambda"] = pair.lam
        doc["mu"] = pair.mu
        doc["partial_certificate"] = True
    doc["basic_set"] = [{"label": k, "nu": nu, "pairing": [list(pr) for pr in prs]} for k, nu, prs in labelled]
    payloads["json"] = to_json(doc)
    emit(args, "polytope", payloads)
    return EXIT_OK


def cmd_verify(args):
    s = load_spectrum(args)
    if s.p > horn.MAX_EXACT_P and not args.hull_only:
        raise UsageError(f"no exact inequality system for p = {s.p}; pass --hull-only")
    tol = args.tol if args.tol is not None else horn.DEFAULT_TOL
    report = horn.conjecture_verify(s, args.samples, seed=args.seed, workers=args.workers, hull_only=args.hull_only)
    doc = report.to_dict()
    threshold = tol * max(1.0, s.trace)
    doc["tol"] = tol
    doc["verified"] = report.max_violation <= threshold
    emit(args, "verify", {"json": to_json(doc)})
    return EXIT_OK if doc["verified"] else EXIT_NEGATIVE


def cmd_p2(args):
    s = load_spectrum(args)
    if s.p != 2:
        raise UsageError(f"the p2 command needs four inertia eigenvalues, got {2 * s.p}")
    analysis = p2.critical_analysis(s)
    phis, thetas, f, nu1, nu2 = p2.grid(s)
    mid = 0.5 * (analysis.fmin + analysis.fmax)
    levels = contour_levels(analysis)
    doc = {"sigma": s.sigma, "trace": s.trace}
    doc.update(analysis.to_dict())
    doc["grid"] = {"n_phi": phis.size, "n_theta": thetas.size}
    doc["contour_levels"] = levels
    doc["mid_level_components"] = p2.contour_components(phis, thetas, f, mid) if levels else 0
    rows = [
        [phis[i], thetas[j], f[i, j], nu1[i, j], nu2[i, j]]
        for i in range(phis.size)
        for j in range(thetas.size)
    ]
    emit(args, "p2", {
        "json": to_json(doc),
        "csv": to_csv(["phi", "theta", "f", "nu_1", "nu_2"], rows),
        "svg": contour_svg(s, analysis),
    })
    return EXIT_OK


# -- parser ----------------------------------------------------------------------


def _positive_int(text):
    try:
        v = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from exc
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser():
    parser = argparse.ArgumentParser(prog="angmom", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, spectrum=True, samples=1):
        sp.add_argument("--input", help="configuration JSON (masses, positions, dim) or {\"sigma\": [...]}")
        if spectrum:
            sp.add_argument("--sigma", help="inertia eigenvalues, comma separated")
        sp.add_argument("--samples", type=_positive_int, default=samples)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol", type=float, default=None)
        sp.add_argument("--out", help="directory for output files")
        sp.add_argument("--format", type=str, default="json", help="comma separated subset of csv,json,svg")
        sp.add_argument("--hull-only", action="store_true", help="accept p > 3 with the Lidskii outer hull only")
        sp.add_argument("--workers", type=_positive_int, default=1, help="sampling threads (output is unaffected)")

    sp = sub.add_parser("certify", help="classify a configuration as central, balanced or neither")
    common(sp, spectrum=False)
    sp.set_defaults(func=cmd_certify, sigma=None)

    sp = sub.add_parser("freq", help="frequency vector of a hermitian structure")
    common(sp)
    sp.add_argument("--pairing", help="basic structure of a pairing, e.g. 1-2,3-4")
    sp.add_argument("--phi", type=float, help="sphere chart latitude (p = 2)")
    sp.add_argument("--theta", type=float, help="sphere chart longitude (p = 2)")
    sp.add_argument("--structure", help="JSON file with R, or with rho and P")
    sp.add_argument("--random", action="store_true", help="Haar-random structures from --seed")
    sp.set_defaults(func=cmd_freq)

    sp = sub.add_parser("polytope", help="inequalities, vertices and basic set")
    common(sp)
    sp.set_defaults(func=cmd_polytope)

    sp = sub.add_parser("verify", help="Monte-Carlo containment of the frequency image")
    common(sp, samples=10000)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("p2", help="grid, critical values and level curves for p = 2")
    common(sp)
    sp.set_defaults(func=cmd_p2)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        args.format = _parse_formats(args.format)
        return args.func(args)
    except nbody.CollisionError as exc:
        print(f"angmom: collision: {exc}", file=sys.stderr)
        return EXIT_COLLISION
    except (UsageError, nbody.ConfigurationFormatError, ValueError) as exc:
        print(f"angmom: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
