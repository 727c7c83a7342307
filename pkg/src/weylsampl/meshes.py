"""Triangle-mesh plumbing: OFF I/O, test meshes and cotangent FEM matrices."""

import numpy as np
import scipy.sparse as sp

from .errors import InvalidInputError, ParseError


def _data_lines(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def parse_off(text):
    """Parse ASCII OFF text into ``(vertices (n, 3), faces (m, 3))``.

    Only triangular faces are accepted. Errors carry the offending line number.
    """
    lines = _data_lines(text)
    try:
        lineno, tok = next(lines)
    except StopIteration:
        raise ParseError("empty file", 1) from None
    if tok[0] != "OFF":
        raise ParseError(f"expected 'OFF' header, got {tok[0]!r}", lineno)
    tok = tok[1:]
    if not tok:
        try:
            lineno, tok = next(lines)
        except StopIteration:
            raise ParseError("missing count line", lineno + 1) from None
    if len(tok) < 2:
        raise ParseError("count line needs vertex and face counts", lineno)
    try:
        nv, nf = int(tok[0]), int(tok[1])
    except ValueError:
        raise ParseError(f"bad counts {' '.join(tok)!r}", lineno) from None
    if nv < 3 or nf < 1:
        raise ParseError(f"need >= 3 vertices and >= 1 face, got {nv}, {nf}", lineno)

    verts = np.empty((nv, 3))
    for i in range(nv):
        try:
            lineno, tok = next(lines)
        except StopIteration:
            raise ParseError(f"expected {nv} vertices, found {i}", lineno + 1) from None
        if len(tok) < 3:
            raise ParseError("vertex line needs 3 coordinates", lineno)
        try:
            verts[i] = [float(t) for t in tok[:3]]
        except ValueError:
            raise ParseError(f"bad vertex coordinates {' '.join(tok[:3])!r}", lineno) from None

    faces = np.empty((nf, 3), dtype=np.int64)
    for i in range(nf):
        try:
            lineno, tok = next(lines)
        except StopIteration:
            raise ParseError(f"expected {nf} faces, found {i}", lineno + 1) from None
        try:
            vals = [int(t) for t in tok[:4]]
        except ValueError:
            raise ParseError(f"bad face line {' '.join(tok)!r}", lineno) from None
        if len(vals) < 4 or vals[0] != 3:
            raise ParseError("only triangular faces '3 i j k' are supported", lineno)
        if min(vals[1:]) < 0 or max(vals[1:]) >= nv:
            raise ParseError(f"face index out of range [0, {nv})", lineno)
        faces[i] = vals[1:]
    return verts, faces


def read_off(path):
    with open(path) as fh:
        return parse_off(fh.read())


def format_off(vertices, faces):
    out = ["OFF", f"{len(vertices)} {len(faces)} 0"]
    out += [f"{x:.17g} {y:.17g} {z:.17g}" for x, y, z in vertices]
    out += [f"3 {i} {j} {k}" for i, j, k in faces]
    return "\n".join(out) + "\n"


def write_off(path, vertices, faces):
    with open(path, "w") as fh:
        fh.write(format_off(vertices, faces))


def icosphere(subdivisions):
    """Unit icosphere; ``subdivisions=4`` gives 2562 vertices."""
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = [[-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
             [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
             [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1]]
    faces = [[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
             [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
             [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
             [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]]
    verts = [np.asarray(v, dtype=float) / np.linalg.norm(v) for v in verts]
    for _ in range(subdivisions):
        cache = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = new
    return np.array(verts), np.array(faces, dtype=np.int64)


def torus_grid(n, length=1.0):
    """Regular n x n periodic triangulation of the flat square torus.

    Returns ``(vertices, faces, period)``; vertices lie in the z = 0 plane and
    edges are measured with the minimum-image convention under ``period``.
    """
    if n < 3:
        raise InvalidInputError("torus grid needs n >= 3")
    h = length / n
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    verts = np.column_stack([i.ravel() * h, j.ravel() * h, np.zeros(n * n)])

    def vid(a, b):
        return (a % n) * n + (b % n)

    faces = []
    for a in range(n):
        for b in range(n):
            faces.append([vid(a, b), vid(a + 1, b), vid(a + 1, b + 1)])
            faces.append([vid(a, b), vid(a + 1, b + 1), vid(a, b + 1)])
    return verts, np.array(faces, dtype=np.int64), np.array([length, length, 0.0])


def edge_vectors(vertices, i, j, period=None):
    d = vertices[j] - vertices[i]
    if period is not None:
        p = np.asarray(period, dtype=float)
        mask = p > 0
        d[:, mask] -= p[mask] * np.floor(d[:, mask] / p[mask] + 0.5)
    return d


def triangle_areas(vertices, faces, period=None):
    e1 = edge_vectors(vertices, faces[:, 0], faces[:, 1], period)
    e2 = edge_vectors(vertices, faces[:, 0], faces[:, 2], period)
    return 0.5 * np.linalg.norm(np.cross(e1, e2), axis=1)


def lumped_mass(vertices, faces, period=None):
    area = triangle_areas(vertices, faces, period)
    return np.bincount(faces.ravel(), weights=np.repeat(area / 3.0, 3),
                       minlength=len(vertices))


def cotangent_stiffness(vertices, faces, period=None):
    """Symmetric positive semidefinite cotangent stiffness matrix (CSR)."""
    n = len(vertices)
    rows, cols, vals = [], [], []
    for k in range(3):
        i, j, o = faces[:, (k + 1) % 3], faces[:, (k + 2) % 3], faces[:, k]
        u = edge_vectors(vertices, o, i, period)
        v = edge_vectors(vertices, o, j, period)
        cot = np.einsum("ij,ij->i", u, v) / np.linalg.norm(np.cross(u, v), axis=1)
        rows += [i, j]
        cols += [j, i]
        vals += [-0.5 * cot, -0.5 * cot]
    off = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                        shape=(n, n)).tocsr()
    diag = -np.asarray(off.sum(axis=1)).ravel()
    return (off + sp.diags(diag)).tocsr()


def edge_graph(vertices, faces, period=None):
    """Sparse symmetric graph of mesh edges weighted by Euclidean length."""
    n = len(vertices)
    e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    e = np.unique(np.sort(e, axis=1), axis=0)
    w = np.linalg.norm(edge_vectors(vertices, e[:, 0], e[:, 1], period), axis=1)
    g = sp.coo_matrix((w, (e[:, 0], e[:, 1])), shape=(n, n))
    return (g + g.T).tocsr(), w
