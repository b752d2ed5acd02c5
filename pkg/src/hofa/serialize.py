"""Text file formats for vectors, polynomials, forms, functions and
certificates.

All writers emit canonical, deterministically ordered text so that equal
objects always serialize to identical bytes.

  vectors      header ``p=<p> n=<n>``, one vector per line of digits
  polynomial   header ``p n k``, ``const <num>/<p^m>``, monomial lines
               ``i_1 ... i_n j c``
  form         header ``p n k`` (plus ``affine``), lines
               ``<subset-mask> j_1 ... j_|I| : c`` with 1-based indices and
               bit (i-1) of the mask set iff slot i is in the subset
  function     header ``p n exact m=<m> den=<den>`` or ``p n float``; one
               line per point: ring coefficients (exact) or ``re im``
  certificate  header ``p n k cert <terms>``; per term a ``term <mask>``
               line followed by ``L``-prefixed and ``R``-prefixed factor
               entries in the form line syntax
"""
from __future__ import annotations

import numpy as np

from .analysis import BoundedFunction
from .cyclotomic import ring
from .errors import HofaError
from .fpspace import Subspace
from .mforms import MultiaffineForm, MultilinearForm
from .ncpoly import Monomial, NcPoly
from .rank import CertTerm, RankCertificate
from .torus import TorusValue


class FormatError(HofaError, ValueError):
    pass


# -- vectors / subspaces --


def dump_vectors(p: int, n: int, vectors) -> str:
    lines = [f"p={p} n={n}"]
    for v in vectors:
        lines.append(" ".join(str(int(a)) for a in v))
    return "\n".join(lines) + "\n"


def load_vectors(text: str):
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    head = lines[0].split()
    p = int(head[0].split("=")[1])
    n = int(head[1].split("=")[1])
    vecs = [tuple(int(a) for a in ln.split()) for ln in lines[1:]]
    for v in vecs:
        if len(v) != n:
            raise FormatError("vector length does not match header")
    return p, n, vecs


def dump_subspace(U: Subspace) -> str:
    return dump_vectors(U.p, U.n, U.basis)


def load_subspace(text: str) -> Subspace:
    p, n, vecs = load_vectors(text)
    return Subspace.from_basis(p, n, vecs)


# -- polynomials --


def dump_poly(P: NcPoly) -> str:
    k = P.degree()
    lines = [f"{P.p} {P.n} {k}"]
    lines.append(f"const {P.constant.num}/{P.p}^{P.constant.m}")
    for m in P.monomials:
        lines.append(" ".join(str(e) for e in m.exponents) + f" {m.depth} {m.coeff}")
    return "\n".join(lines) + "\n"


def load_poly(text: str) -> NcPoly:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    p, n, _k = (int(t) for t in lines[0].split())
    const_tok = lines[1].split()
    if const_tok[0] != "const":
        raise FormatError("missing const line")
    num_s, den_s = const_tok[1].split("/")
    base_s, m_s = den_s.split("^")
    if int(base_s) != p:
        raise FormatError("constant denominator is not a power of p")
    const = TorusValue.make(p, int(num_s), int(m_s))
    monos = []
    for ln in lines[2:]:
        toks = [int(t) for t in ln.split()]
        monos.append(Monomial(tuple(toks[:n]), toks[n], toks[n + 1]))
    return NcPoly.make(p, n, const, monos)


# -- forms --


def _mask_of(slots, k: int) -> int:
    return sum(1 << s for s in slots)


def _slots_of(mask: int, k: int):
    return tuple(s for s in range(k) if mask >> s & 1)


def dump_form(T: MultilinearForm) -> str:
    lines = [f"{T.p} {T.n} {T.k}"]
    full = (1 << T.k) - 1
    for idx, c in T.entries():
        ones = " ".join(str(j + 1) for j in idx)
        lines.append(f"{full} {ones} : {c}")
    return "\n".join(lines) + "\n"


def dump_multiaffine(phi: MultiaffineForm) -> str:
    lines = [f"{phi.p} {phi.n} {phi.k} affine"]
    for slots, comp in phi.components:
        mask = _mask_of(slots, phi.k)
        if len(slots) == 0:
            lines.append(f"0 : {int(comp.coeffs)}")
            continue
        for idx, c in comp.entries():
            ones = " ".join(str(j + 1) for j in idx)
            lines.append(f"{mask} {ones} : {c}")
    return "\n".join(lines) + "\n"


def _parse_form_lines(lines, p, n, k):
    full = (1 << k) - 1
    comps: dict = {}
    for ln in lines:
        head, _, val = ln.partition(":")
        toks = head.split()
        mask = int(toks[0])
        idx = tuple(int(t) - 1 for t in toks[1:])
        slots = _slots_of(mask, k)
        if len(idx) != len(slots):
            raise FormatError("index count does not match subset size")
        c = int(val.strip())
        store = comps.setdefault(mask, {})
        store[idx] = (store.get(idx, 0) + c) % p
    return comps


def load_form(text: str) -> MultilinearForm | MultiaffineForm:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    head = lines[0].split()
    p, n, k = int(head[0]), int(head[1]), int(head[2])
    affine = len(head) > 3 and head[3] == "affine"
    comps = _parse_form_lines(lines[1:], p, n, k)
    if not affine:
        entries = comps.get((1 << k) - 1, {})
        if set(comps) - {(1 << k) - 1}:
            raise FormatError("plain form file contains non-full subsets")
        return MultilinearForm.from_entries(p, n, k, entries)
    built = {}
    for mask, entries in comps.items():
        slots = _slots_of(mask, k)
        if not slots:
            built[()] = entries.get((), 0)
        else:
            built[slots] = MultilinearForm.from_entries(p, n, len(slots), entries)
    return MultiaffineForm.make(p, n, k, built)


# -- functions --


def dump_function(f: BoundedFunction) -> str:
    if f.exact:
        m = 0
        N = f.ring.N
        while f.p**m != N:
            m += 1
        lines = [f"{f.p} {f.n} exact m={m} den={f.den}"]
        for col in range(f.size):
            lines.append(" ".join(str(int(v)) for v in f.coeffs[:, col]))
    else:
        lines = [f"{f.p} {f.n} float"]
        for z in f.values:
            lines.append(f"{float(z.real)!r} {float(z.imag)!r}")
    return "\n".join(lines) + "\n"


def load_function(text: str) -> BoundedFunction:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    head = lines[0].split()
    p, n, mode = int(head[0]), int(head[1]), head[2]
    if mode == "float":
        vals = [complex(float(ln.split()[0]), float(ln.split()[1])) for ln in lines[1:]]
        return BoundedFunction.from_complex_values(p, n, np.array(vals))
    opts = dict(tok.split("=") for tok in head[3:])
    m = int(opts.get("m", 1))
    den = int(opts.get("den", 1))
    R = ring(p, m)
    cols = []
    for ln in lines[1:]:
        cols.append([int(t) for t in ln.split()])
    coeffs = np.array(cols, dtype=np.int64).T
    if coeffs.shape != (R.degree, p**n):
        raise FormatError("coefficient table has the wrong shape")
    return BoundedFunction(p, n, R, coeffs, den)


# -- certificates --


def dump_certificate(cert: RankCertificate) -> str:
    f = cert.claimed_form
    lines = [f"{f.p} {f.n} {f.k} cert {len(cert.terms)}"]
    for t in cert.terms:
        lines.append(f"term {_mask_of(t.slots, f.k)}")
        for tag, factor in (("L", t.left), ("R", t.right)):
            if factor.k == 0:
                lines.append(f"{tag} : {int(factor.coeffs)}")
                continue
            for idx, c in factor.entries():
                ones = " ".join(str(j + 1) for j in idx)
                lines.append(f"{tag} {ones} : {c}")
    return "\n".join(lines) + "\n"


def dump_witness_bundle(form, bs) -> str:
    """Witness bundle: a [form] section plus [b1]..[b7] function sections."""
    parts = ["[form]"]
    if isinstance(form, MultiaffineForm):
        parts.append(dump_multiaffine(form).rstrip())
    else:
        parts.append(dump_form(form).rstrip())
    for i, b in enumerate(bs, start=1):
        parts.append(f"[b{i}]")
        parts.append(dump_function(b).rstrip())
    return "\n".join(parts) + "\n"


def load_witness_bundle(text: str):
    sections: dict = {}
    current = None
    for ln in text.splitlines():
        s = ln.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1]
            sections[current] = []
        elif current is not None:
            sections[current].append(ln)
    if "form" not in sections:
        raise FormatError("witness bundle is missing the [form] section")
    form = load_form("\n".join(sections["form"]))
    bs = []
    for i in range(1, 8):
        key = f"b{i}"
        if key not in sections:
            raise FormatError(f"witness bundle is missing [{key}]")
        bs.append(load_function("\n".join(sections[key])))
    return form, tuple(bs)


def load_certificate(text: str, claimed: MultilinearForm) -> RankCertificate:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    head = lines[0].split()
    p, n, k = int(head[0]), int(head[1]), int(head[2])
    if (p, n, k) != (claimed.p, claimed.n, claimed.k):
        raise FormatError("certificate header does not match the claimed form")
    terms = []
    cur_mask = None
    cur: dict = {}
    def flush():
        if cur_mask is None:
            return
        slots = _slots_of(cur_mask, k)
        left = MultilinearForm.from_entries(p, n, len(slots), cur.get("L", {}))
        right = MultilinearForm.from_entries(p, n, k - len(slots), cur.get("R", {}))
        terms.append(CertTerm(slots, left, right))
    for ln in lines[1:]:
        if ln.startswith("term"):
            flush()
            cur_mask = int(ln.split()[1])
            cur = {}
        else:
            tag, rest = ln.split(maxsplit=1)
            head_part, _, val = rest.partition(":")
            idx = tuple(int(t) - 1 for t in head_part.split())
            cur.setdefault(tag, {})[idx] = int(val.strip())
    flush()
    return RankCertificate(claimed, tuple(terms))
