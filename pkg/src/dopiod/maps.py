"""Vector-valued Taylor maps: evaluation, composition and inversion."""

from __future__ import annotations

import numpy as np

from .algebra import TaylorPoly, TpsAlgebra, algebra, constant_poly, make_variable

__all__ = ["TaylorMap", "identity_map"]


class TaylorMap:
    """Ordered list of TaylorPoly outputs sharing one (num_vars, order)."""

    __slots__ = ("outputs",)

    def __init__(self, outputs):
        outs = tuple(outputs)
        if not outs:
            raise ValueError("a map needs at least one output")
        alg = outs[0].alg
        for p in outs[1:]:
            if (p.num_vars, p.order) != (alg.num_vars, alg.order):
                raise ValueError("outputs must share (num_vars, order)")
        object.__setattr__(self, "outputs", outs)

    def __setattr__(self, *a):
        raise AttributeError("TaylorMap is immutable")

    @property
    def alg(self) -> TpsAlgebra:
        return self.outputs[0].alg

    @property
    def num_vars(self) -> int:
        return self.alg.num_vars

    @property
    def num_outputs(self) -> int:
        return len(self.outputs)

    @property
    def order(self) -> int:
        return self.alg.order

    def __len__(self) -> int:
        return len(self.outputs)

    def __getitem__(self, i) -> TaylorPoly:
        return self.outputs[i]

    def constants(self) -> np.ndarray:
        return np.array([p.const for p in self.outputs])

    def coeff_matrix(self) -> np.ndarray:
        return np.stack([p.coeffs for p in self.outputs])

    def jacobian(self) -> np.ndarray:
        """Linear part at the origin, shape (num_outputs, num_vars)."""
        return np.stack([p.linear_part() for p in self.outputs])

    def eval(self, point) -> np.ndarray:
        p = np.asarray(point, dtype=float)
        if p.shape != (self.num_vars,):
            raise ValueError("point length must equal num_vars")
        alg = self.alg
        mono = np.empty(alg.size)
        mono[0] = 1.0
        for m in range(1, alg.size):
            mono[m] = mono[alg.pred_idx[m]] * p[alg.pred_var[m]]
        return self.coeff_matrix() @ mono

    def eval_many(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.num_vars:
            raise ValueError("points must have shape (n, num_vars)")
        alg = self.alg
        mono = np.empty((alg.size, pts.shape[0]))
        mono[0] = 1.0
        for m in range(1, alg.size):
            mono[m] = mono[alg.pred_idx[m]] * pts[:, alg.pred_var[m]]
        return (self.coeff_matrix() @ mono).T

    def __call__(self, point) -> np.ndarray:
        return self.eval(point)

    # -- composition ----------------------------------------------------
    def compose(self, inner: "TaylorMap", allow_const: bool = False) -> "TaylorMap":
        """outer(inner(.)), truncated at the common order.

        ``inner`` must have as many outputs as this map has variables and,
        unless ``allow_const`` is set, zero constant parts (the truncated
        composition is only the Taylor expansion of the true composite for
        origin-preserving substitutions or small constant shifts).
        """
        if inner.num_outputs != self.num_vars:
            raise ValueError(
                f"inner outputs ({inner.num_outputs}) must equal "
                f"outer num_vars ({self.num_vars})"
            )
        if inner.order != self.order:
            raise ValueError("maps must share the truncation order")
        if not allow_const and np.max(np.abs(inner.constants()), initial=0.0) > 1e-12:
            raise ValueError(
                "inner map must be origin-preserving (pass allow_const=True "
                "to accept constant shifts)"
            )
        out_alg = self.alg
        in_alg = inner.alg
        # value of every outer monomial as a polynomial in the inner variables
        mono = np.empty((out_alg.size, in_alg.size))
        mono[0] = 0.0
        mono[0, 0] = 1.0
        inner_coeffs = [p.coeffs for p in inner.outputs]
        for m in range(1, out_alg.size):
            mono[m] = in_alg.mul_coeffs(
                mono[out_alg.pred_idx[m]], inner_coeffs[out_alg.pred_var[m]]
            )
        res = self.coeff_matrix() @ mono
        return TaylorMap([TaylorPoly._new(in_alg, row) for row in res])

    def invert(self) -> "TaylorMap":
        """Inverse of an origin-preserving square map.

        Fixed-point iteration on the nonlinear part: the linear part is
        inverted exactly, then X <- Linv o (I - N o X) is applied order - 1
        times, which terminates exactly because the nonlinear part of an
        origin-preserving map is nilpotent under truncated composition.
        """
        if self.num_outputs != self.num_vars:
            raise ValueError("only square maps can be inverted")
        if np.max(np.abs(self.constants())) > 1e-12:
            raise ValueError("map must be origin-preserving for inversion")
        v, k = self.num_vars, self.order
        jac = self.jacobian()
        cond = np.linalg.cond(jac)
        if not np.isfinite(cond) or cond > 1e12:
            raise np.linalg.LinAlgError(
                f"linear part numerically singular (condition estimate {cond:.3e})"
            )
        jinv = np.linalg.inv(jac)
        alg = self.alg

        def linear_map(mat: np.ndarray) -> TaylorMap:
            outs = []
            for row in mat:
                c = np.zeros(alg.size)
                for j, val in enumerate(row):
                    e = [0] * v
                    e[j] = 1
                    c[alg.index[tuple(e)]] = val
                outs.append(TaylorPoly(alg, c))
            return TaylorMap(outs)

        linv = linear_map(jinv)
        # nonlinear part: degree >= 2 terms only
        nl_rows = np.where(alg.deg >= 2, self.coeff_matrix(), 0.0)
        nonlin = TaylorMap([TaylorPoly._new(alg, row) for row in nl_rows])
        ident_mat = identity_map(v, k).coeff_matrix()
        x = linv
        for _ in range(k - 1):
            nx = nonlin.compose(x)
            # linv is linear, so composing it reduces to a matrix product
            x_mat = jinv @ (ident_mat - nx.coeff_matrix())
            x = TaylorMap([TaylorPoly._new(alg, row) for row in x_mat])
        return x

    # -- serialization ----------------------------------------------------
    def to_dict(self) -> dict:
        alg = self.alg
        outs = []
        for p in self.outputs:
            nz = np.nonzero(p.coeffs)[0]
            outs.append(
                [[alg.exps[i].tolist(), float(p.coeffs[i])] for i in nz]
            )
        return {
            "format": "dopiod.taylor_map/1",
            "num_vars": self.num_vars,
            "order": self.order,
            "outputs": outs,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TaylorMap":
        if d.get("format", "dopiod.taylor_map/1") != "dopiod.taylor_map/1":
            raise ValueError("unrecognized Taylor map format")
        alg = algebra(int(d["num_vars"]), int(d["order"]))
        outs = []
        for terms in d["outputs"]:
            c = np.zeros(alg.size)
            for exps, val in terms:
                c[alg.index[tuple(int(e) for e in exps)]] = float(val)
            outs.append(TaylorPoly(alg, c))
        return cls(outs)


def identity_map(num_vars: int, order: int) -> TaylorMap:
    return TaylorMap(
        [make_variable(0.0, j, 1.0, num_vars, order) for j in range(num_vars)]
    )
