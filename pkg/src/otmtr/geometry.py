# -*- coding: utf-8 -*-
"""
Metric-space construction: triangulated meshes, geodesic cost matrices,
Gibbs kernels and connected label partitions.

Distances are graph geodesics on the mesh edge graph (Euclidean edge
weights) and are expressed in centimeters throughout.
"""

import struct

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, dijkstra


class GeometryError(ValueError):
    """Invalid geometric input."""


class DisconnectedMeshError(GeometryError):
    """Mesh edge graph has more than one connected component."""

    def __init__(self, component_vertices):
        self.component_vertices = list(component_vertices)
        preview = self.component_vertices[:10]
        msg = ("mesh edge graph is disconnected; isolated component of "
               "%d vertices: %s%s" % (len(self.component_vertices), preview,
                                      "..." if len(self.component_vertices) > 10 else ""))
        super().__init__(msg)


class KernelUnderflowError(GeometryError):
    """All off-diagonal kernel entries of some row underflowed to zero."""

    def __init__(self, rows, epsilon):
        self.rows = list(rows)
        msg = ("Gibbs kernel underflow: off-diagonal entries of row(s) %s are all "
               "below the smallest positive normal float for epsilon=%g; "
               "increase epsilon" % (self.rows[:10], epsilon))
        super().__init__(msg)


class Mesh:
    """Triangulated surface with vertex coordinates in centimeters.

    Parameters
    ----------
    vertices : array, shape (p, 3)
        Vertex coordinates (cm).
    triangles : array, shape (t, 3)
        Vertex-index triples, each index in ``[0, p)``.
    """

    def __init__(self, vertices, triangles):
        vertices = np.asarray(vertices, dtype=np.float64)
        triangles = np.asarray(triangles, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 3:
            raise GeometryError("vertices must have shape (p, 3)")
        if triangles.ndim != 2 or triangles.shape[1] != 3:
            raise GeometryError("triangles must have shape (t, 3)")
        if triangles.size and (triangles.min() < 0 or triangles.max() >= len(vertices)):
            raise GeometryError("triangle indices out of range")
        self.vertices = vertices
        self.triangles = triangles

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    def edges(self):
        """Unique undirected edges as an array of shape (e, 2) with i < j."""
        t = self.triangles
        pairs = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [0, 2]]])
        pairs = np.sort(pairs, axis=1)
        return np.unique(pairs, axis=0)

    def edge_lengths(self, edges=None):
        if edges is None:
            edges = self.edges()
        diff = self.vertices[edges[:, 0]] - self.vertices[edges[:, 1]]
        return np.sqrt((diff ** 2).sum(axis=1))

    def adjacency(self):
        """Sparse symmetric adjacency with Euclidean edge weights."""
        edges = self.edges()
        w = self.edge_lengths(edges)
        p = self.n_vertices
        i = np.concatenate([edges[:, 0], edges[:, 1]])
        j = np.concatenate([edges[:, 1], edges[:, 0]])
        return coo_matrix((np.concatenate([w, w]), (i, j)), shape=(p, p)).tocsr()

    @classmethod
    def from_off(cls, path):
        """Read an OFF-style text file (optional "OFF" header line)."""
        with open(path) as f:
            tokens = []
            for line in f:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                tokens.extend(line.split())
        if not tokens:
            raise GeometryError("empty OFF file: %s" % path)
        if tokens[0].upper() == "OFF":
            tokens = tokens[1:]
        if len(tokens) < 3:
            raise GeometryError("truncated OFF header in %s" % path)
        nv, nf = int(tokens[0]), int(tokens[1])
        pos = 3  # skip edge count
        need = nv * 3
        verts = np.array(tokens[pos:pos + need], dtype=np.float64).reshape(nv, 3)
        pos += need
        tris = []
        for _ in range(nf):
            k = int(tokens[pos])
            if k != 3:
                raise GeometryError("only triangular faces supported, got %d-gon" % k)
            tris.append([int(t) for t in tokens[pos + 1:pos + 4]])
            pos += 1 + k
        return cls(verts, np.array(tris, dtype=np.int64).reshape(nf, 3))

    def to_off(self, path):
        with open(path, "w") as f:
            f.write("OFF\n%d %d 0\n" % (self.n_vertices, len(self.triangles)))
            for v in self.vertices:
                f.write("%r %r %r\n" % (float(v[0]), float(v[1]), float(v[2])))
            for t in self.triangles:
                f.write("3 %d %d %d\n" % (t[0], t[1], t[2]))


def grid_mesh(n_rows, n_cols, spacing=1.0):
    """Regular triangulated grid in the z=0 plane.

    Vertices are laid out row-major with the given spacing (cm); each grid
    cell is split into two triangles. Handy as a synthetic source space.
    """
    if n_rows < 1 or n_cols < 1:
        raise GeometryError("grid must have at least one row and column")
    rr, cc = np.meshgrid(np.arange(n_rows), np.arange(n_cols), indexing="ij")
    verts = np.column_stack([cc.ravel() * spacing, rr.ravel() * spacing,
                             np.zeros(n_rows * n_cols)])
    tris = []
    for r in range(n_rows - 1):
        for c in range(n_cols - 1):
            a = r * n_cols + c
            b = a + 1
            d = a + n_cols
            e = d + 1
            tris.append([a, b, d])
            tris.append([b, e, d])
    if not tris:
        raise GeometryError("grid mesh needs at least 2x2 vertices to have faces")
    return Mesh(verts, np.array(tris, dtype=np.int64))


def build_geodesic_costs(mesh):
    """All-pairs geodesic cost matrix on the mesh edge graph.

    Returns the dense symmetric (p, p) matrix of shortest-path distances
    (cm), exact on the edge graph. Raises ``DisconnectedMeshError`` naming
    an isolated component if the graph is not connected.
    """
    adj = mesh.adjacency()
    n_comp, labels = connected_components(adj, directed=False)
    if n_comp > 1:
        # report the smallest component as the isolated one
        sizes = np.bincount(labels)
        comp = int(np.argmin(sizes))
        raise DisconnectedMeshError(np.flatnonzero(labels == comp))
    M = dijkstra(adj, directed=False)
    # shortest paths are symmetric up to floating roundoff; enforce exactly
    M = np.minimum(M, M.T)
    np.fill_diagonal(M, 0.0)
    return M


class GibbsKernel:
    """Elementwise exponential kernel ``K = exp(-M / epsilon)``.

    Keeps a reference to the cost matrix so that log-domain rescaling of
    Sinkhorn iterations can rebuild stabilized kernels.
    """

    def __init__(self, K, cost, epsilon):
        self.K = K
        self.cost = cost
        self.epsilon = float(epsilon)
        self.total = float(K.sum())

    @property
    def n(self):
        return self.K.shape[0]


def gibbs_kernel(M, epsilon):
    """Build the Gibbs kernel of a cost matrix.

    Parameters
    ----------
    M : array, shape (p, p)
        Symmetric nonnegative cost matrix (cm).
    epsilon : float
        Entropic scale (cm), > 0.

    Raises
    ------
    KernelUnderflowError
        If every off-diagonal entry of some row underflows to zero, which
        would later produce divisions by zero inside Sinkhorn scalings.
    """
    if epsilon <= 0:
        raise GeometryError("epsilon must be > 0, got %g" % epsilon)
    M = np.asarray(M, dtype=np.float64)
    K = np.exp(-M / epsilon)
    p = K.shape[0]
    if p > 1:
        off = K + np.diag(np.full(p, np.inf))  # mask the diagonal
        np.fill_diagonal(off, 0.0)
        row_max = off.max(axis=1)
        bad = np.flatnonzero(row_max < np.finfo(np.float64).tiny)
        if bad.size:
            raise KernelUnderflowError(bad, epsilon)
    return GibbsKernel(K, M, epsilon)


class LabelPartition:
    """Partition of the vertex set into edge-connected labeled regions."""

    def __init__(self, labels, n_labels):
        self.labels = np.asarray(labels, dtype=np.int64)
        self.n_labels = int(n_labels)
        if self.labels.min() < 0 or self.labels.max() >= n_labels:
            raise GeometryError("label ids must lie in [0, n_labels)")

    def members(self, label):
        return np.flatnonzero(self.labels == label)


def make_label_partition(mesh, n_labels, seed):
    """Grow ``n_labels`` connected regions from random seed vertices.

    Multi-source breadth-first expansion with seed-index tie-breaking:
    in every round each seed claims the unclaimed neighbors of its current
    region, lower seed index first. Deterministic given ``seed``, and each
    label is an edge-connected vertex set covering the whole mesh.
    """
    p = mesh.n_vertices
    if n_labels < 1 or n_labels > p:
        raise GeometryError("n_labels must be in [1, p], got %d" % n_labels)
    rng = np.random.default_rng(seed)
    seeds = rng.choice(p, size=n_labels, replace=False)

    neighbors = [[] for _ in range(p)]
    for i, j in mesh.edges():
        neighbors[i].append(int(j))
        neighbors[j].append(int(i))
    neighbors = [sorted(ns) for ns in neighbors]

    labels = np.full(p, -1, dtype=np.int64)
    frontiers = []
    for lab, s in enumerate(seeds):
        labels[s] = lab
        frontiers.append([int(s)])
    remaining = p - n_labels
    while remaining > 0:
        grew = False
        for lab in range(n_labels):
            nxt = []
            for v in frontiers[lab]:
                for w in neighbors[v]:
                    if labels[w] < 0:
                        labels[w] = lab
                        nxt.append(w)
                        remaining -= 1
            frontiers[lab] = nxt
            grew = grew or bool(nxt)
        if not grew:
            # unreachable vertices mean a disconnected mesh
            raise DisconnectedMeshError(np.flatnonzero(labels < 0))
    return LabelPartition(labels, n_labels)


class Geometry:
    """Bundle of a mesh, its geodesic cost matrix and a label partition."""

    def __init__(self, mesh, cost=None, labels=None):
        self.mesh = mesh
        self.cost = build_geodesic_costs(mesh) if cost is None else cost
        self.labels = labels
        self._kernels = {}

    @property
    def n_sources(self):
        return self.mesh.n_vertices

    def gibbs(self, epsilon):
        """Gibbs kernel for this geometry, cached per epsilon."""
        key = float(epsilon)
        if key not in self._kernels:
            self._kernels[key] = gibbs_kernel(self.cost, key)
        return self._kernels[key]


_MAGIC_HEADER = struct.Struct("<II")  # (rows, cols), little-endian


def save_matrix(path, A):
    """Write a dense matrix as little-endian float64, row-major.

    The 8-byte header stores the dimensions as two uint32 values; square
    cost matrices store (p, p).
    """
    A = np.ascontiguousarray(A, dtype="<f8")
    if A.ndim != 2:
        raise GeometryError("only 2-D matrices are supported")
    with open(path, "wb") as f:
        f.write(_MAGIC_HEADER.pack(A.shape[0], A.shape[1]))
        f.write(A.tobytes())


def load_matrix(path):
    with open(path, "rb") as f:
        header = f.read(_MAGIC_HEADER.size)
        if len(header) != _MAGIC_HEADER.size:
            raise GeometryError("truncated matrix header in %s" % path)
        rows, cols = _MAGIC_HEADER.unpack(header)
        data = np.frombuffer(f.read(), dtype="<f8")
    if data.size != rows * cols:
        raise GeometryError("matrix payload size mismatch in %s" % path)
    return data.reshape(rows, cols).astype(np.float64)
