"""Array-valued dual numbers for forward-mode differentiation.

``Dual`` carries a value array and a trailing tangent axis of length ``P``
(one direction per parameter), so a single evaluation yields a full
gradient.  ``BiDual`` carries two independent first-order channels and
their mixed second-order part, which is what the geometric tensor needs:
a mixed Hessian between the "left" and "right" parameter copies.

Only the operations used by the kernel code are supported: ``+``, ``-``,
``*``, division by plain numbers, indexing along the value axes and
``sum``.
"""

from __future__ import annotations

import numpy as np


def _plain(x) -> bool:
    return not isinstance(x, (Dual, BiDual))


class Dual:
    __array_ufunc__ = None  # make numpy defer to the reflected operators

    def __init__(self, val, der):
        self.val = np.asarray(val, dtype=float)
        self.der = np.asarray(der, dtype=float)

    @classmethod
    def seed(cls, x) -> "Dual":
        """Independent variables: one tangent direction per entry of ``x``."""
        x = np.asarray(x, dtype=float)
        return cls(x, np.eye(x.size).reshape(x.shape + (x.size,)))

    @property
    def shape(self):
        return self.val.shape

    @property
    def ndim(self):
        return self.val.ndim

    @property
    def n_dirs(self) -> int:
        return self.der.shape[-1]

    def reshape(self, *shape) -> "Dual":
        shape = shape[0] if len(shape) == 1 and isinstance(shape[0], tuple) else shape
        return Dual(self.val.reshape(shape), self.der.reshape(tuple(shape) + (self.n_dirs,)))

    def __getitem__(self, idx) -> "Dual":
        if not isinstance(idx, tuple):
            idx = (idx,)
        return Dual(self.val[idx], self.der[idx + (slice(None),)])

    def _lift(self, x):
        # a plain array broadcasts against val; give it a trailing axis for der
        return np.asarray(x, dtype=float)[..., None]

    def __add__(self, other):
        if _plain(other):
            return Dual(self.val + other, self.der + 0.0 * self._lift(other))
        return Dual(self.val + other.val, self.der + other.der)

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.val, -self.der)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if _plain(other):
            return Dual(self.val * other, self.der * self._lift(other))
        return Dual(
            self.val * other.val,
            self.der * other.val[..., None] + self.val[..., None] * other.der,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not _plain(other):
            raise TypeError("division by a Dual is not needed by the kernels")
        return self * (1.0 / np.asarray(other, dtype=float))

    def sum(self, axis=None):
        if axis is None:
            axis = tuple(range(self.ndim))
        axes = np.atleast_1d(axis) % max(self.ndim, 1)
        return Dual(self.val.sum(axis=tuple(axes)), self.der.sum(axis=tuple(axes)))


class BiDual:
    """Value plus two first-order channels ``a``, ``b`` and the mixed ``ab`` part.

    Multiplication keeps ``a*a`` and ``b*b`` terms out (they are truncated),
    which is exact for the mixed derivative d^2/(da db).
    """

    __array_ufunc__ = None

    def __init__(self, val, da, db, dab):
        self.val = np.asarray(val, dtype=float)
        self.da = np.asarray(da, dtype=float)
        self.db = np.asarray(db, dtype=float)
        self.dab = np.asarray(dab, dtype=float)

    @classmethod
    def seed_a(cls, x, n_b: int) -> "BiDual":
        x = np.asarray(x, dtype=float)
        s = x.shape
        return cls(x, np.eye(x.size).reshape(s + (x.size,)), np.zeros(s + (n_b,)), np.zeros(s + (x.size, n_b)))

    @classmethod
    def seed_b(cls, x, n_a: int) -> "BiDual":
        x = np.asarray(x, dtype=float)
        s = x.shape
        return cls(x, np.zeros(s + (n_a,)), np.eye(x.size).reshape(s + (x.size,)), np.zeros(s + (n_a, x.size)))

    @property
    def shape(self):
        return self.val.shape

    @property
    def ndim(self):
        return self.val.ndim

    def reshape(self, *shape) -> "BiDual":
        shape = tuple(shape[0] if len(shape) == 1 and isinstance(shape[0], tuple) else shape)
        na, nb = self.da.shape[-1], self.db.shape[-1]
        return BiDual(
            self.val.reshape(shape),
            self.da.reshape(shape + (na,)),
            self.db.reshape(shape + (nb,)),
            self.dab.reshape(shape + (na, nb)),
        )

    def __getitem__(self, idx) -> "BiDual":
        if not isinstance(idx, tuple):
            idx = (idx,)
        s = slice(None)
        return BiDual(self.val[idx], self.da[idx + (s,)], self.db[idx + (s,)], self.dab[idx + (s, s)])

    def __add__(self, other):
        if _plain(other):
            z = 0.0 * np.asarray(other, dtype=float)
            return BiDual(
                self.val + other,
                self.da + z[..., None],
                self.db + z[..., None],
                self.dab + z[..., None, None],
            )
        return BiDual(self.val + other.val, self.da + other.da, self.db + other.db, self.dab + other.dab)

    __radd__ = __add__

    def __neg__(self):
        return BiDual(-self.val, -self.da, -self.db, -self.dab)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if _plain(other):
            o = np.asarray(other, dtype=float)
            return BiDual(self.val * o, self.da * o[..., None], self.db * o[..., None], self.dab * o[..., None, None])
        u, v = self, other
        return BiDual(
            u.val * v.val,
            u.da * v.val[..., None] + u.val[..., None] * v.da,
            u.db * v.val[..., None] + u.val[..., None] * v.db,
            u.dab * v.val[..., None, None]
            + u.val[..., None, None] * v.dab
            + u.da[..., :, None] * v.db[..., None, :]
            + v.da[..., :, None] * u.db[..., None, :],
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not _plain(other):
            raise TypeError("division by a BiDual is not needed by the kernels")
        return self * (1.0 / np.asarray(other, dtype=float))

    def sum(self, axis=None):
        if axis is None:
            axis = tuple(range(self.ndim))
        axes = tuple(np.atleast_1d(axis) % max(self.ndim, 1))
        return BiDual(self.val.sum(axis=axes), self.da.sum(axis=axes), self.db.sum(axis=axes), self.dab.sum(axis=axes))
