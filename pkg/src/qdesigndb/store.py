"""Component records, their on-disk JSONL store, and combinatorial composition.

A store directory holds one line-delimited JSON file per component type
(qubit_claw.jsonl, resonator.jsonl, coupler.jsonl, validated.jsonl) plus a
manifest.json carrying the schema version. Records are validated on load;
malformed ones are collected into an error report while valid ones are
kept. Loaded stores are immutable and are composed lazily into candidate
designs once a Josephson energy is specified.
"""

from __future__ import annotations

import copy
import importlib.resources
import json
from collections.abc import Iterator
from dataclasses import dataclass, field, replace
from pathlib import Path

from .physics import (
    HamiltonianParams,
    charging_energy,
    coupled_res_freq_and_kappa,
    coupling_g_capacitive,
    g_from_lamb,
    resonator_effective_capacitance,
    transmon_fq_alpha,
)

SCHEMA_VERSION = 1

_FILES = {
    "qubit_claw": "qubit_claw.jsonl",
    "resonator": "resonator.jsonl",
    "coupler": "coupler.jsonl",
    "validated": "validated.jsonl",
}

__all__ = [
    "SCHEMA_VERSION",
    "StoreError",
    "RecordError",
    "QubitClawEntry",
    "ResonatorEntry",
    "CouplerEntry",
    "ValidatedDeviceEntry",
    "ComponentStore",
    "CandidateDesign",
    "load_components",
    "write_components",
    "compose_candidates",
    "store_stats",
    "sample_store_path",
]


class StoreError(RuntimeError):
    """Unrecoverable store problem: unreadable file, schema or id conflict."""


class _RecordInvalid(ValueError):
    """One record failed validation (collected, not fatal)."""


@dataclass(frozen=True)
class RecordError:
    file: str
    line: int
    record_id: str | None
    message: str


def _section(raw: dict, key: str) -> dict:
    sec = raw.get(key)
    if not isinstance(sec, dict):
        raise _RecordInvalid(f"missing or non-object section {key!r}")
    return sec


def _num(sec: dict, key: str, where: str) -> float:
    v = sec.get(key)
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise _RecordInvalid(f"missing or non-numeric field {where}.{key}")
    return float(v)


def _ident(raw: dict) -> str:
    v = raw.get("id")
    if not isinstance(v, str) or not v:
        raise _RecordInvalid("missing or empty id")
    return v


def _check_sim_meta(raw: dict) -> dict:
    meta = _section(raw, "sim_meta")
    if not isinstance(meta.get("solver"), str):
        raise _RecordInvalid("sim_meta.solver must be a string")
    _num(meta, "mesh_max", "sim_meta")
    if _num(meta, "conv_tol", "sim_meta") <= 0:
        raise _RecordInvalid("sim_meta.conv_tol must be positive")
    if not isinstance(meta.get("min_passes"), int):
        raise _RecordInvalid("sim_meta.min_passes must be an integer")
    return meta


def _check_provenance(raw: dict) -> dict:
    prov = _section(raw, "provenance")
    if not isinstance(prov.get("validated"), bool):
        raise _RecordInvalid("provenance.validated must be a boolean")
    if not isinstance(prov.get("reference"), str):
        raise _RecordInvalid("provenance.reference must be a string")
    return prov


@dataclass(frozen=True)
class QubitClawEntry:
    """Simulated xmon cross plus coupling claw: geometry and capacitances."""

    id: str
    cross_length: float
    claw_length: float
    claw_width: float
    gap: float
    C_q: float
    C_c: float
    sim_meta: dict
    provenance: dict
    raw: dict

    @classmethod
    def from_record(cls, raw: dict) -> "QubitClawEntry":
        ident = _ident(raw)
        geom = _section(raw, "geometry")
        cm = _section(raw, "cmatrix")
        c_q = _num(cm, "C_q", "cmatrix")
        c_c = _num(cm, "C_c", "cmatrix")
        if c_q <= 0 or c_c <= 0:
            raise _RecordInvalid("C_q and C_c must be positive")
        if c_c >= c_q:
            raise _RecordInvalid(f"claw capacitance C_c={c_c} must stay below C_q={c_q}")
        return cls(
            id=ident,
            cross_length=_num(geom, "cross_length", "geometry"),
            claw_length=_num(geom, "claw_length", "geometry"),
            claw_width=_num(geom, "claw_width", "geometry"),
            gap=_num(geom, "gap", "geometry"),
            C_q=c_q,
            C_c=c_c,
            sim_meta=_check_sim_meta(raw),
            provenance=_check_provenance(raw),
            raw=raw,
        )

    def to_record(self) -> dict:
        rec = copy.deepcopy(self.raw)
        rec["id"] = self.id
        rec.setdefault("geometry", {}).update(
            cross_length=self.cross_length, claw_length=self.claw_length,
            claw_width=self.claw_width, gap=self.gap)
        rec.setdefault("cmatrix", {}).update(C_q=self.C_q, C_c=self.C_c)
        return rec


@dataclass(frozen=True)
class ResonatorEntry:
    """CPW readout resonator, either distributed- or lumped-coupled.

    Distributed entries store (f_bare, kappa) simulated with the feedline
    section included; lumped entries store the unloaded f_bare plus the
    reference coupler capacitances (C_rf, C_cg).
    """

    id: str
    res_type: str          # quarter | half
    coupling_kind: str     # distributed | lumped
    cpw_length: float
    claw_length: float
    feedline_coupling_dim: float
    f_bare: float
    Z_c: float
    sim_meta: dict
    provenance: dict
    raw: dict
    kappa: float | None = None     # distributed only, MHz
    C_rf: float | None = None      # lumped only, fF
    C_cg: float | None = None      # lumped only, fF

    @classmethod
    def from_record(cls, raw: dict) -> "ResonatorEntry":
        ident = _ident(raw)
        res_type = raw.get("res_type")
        if res_type not in ("quarter", "half"):
            raise _RecordInvalid(f"res_type must be quarter|half, got {res_type!r}")
        kind = raw.get("coupling_kind")
        if kind not in ("distributed", "lumped"):
            raise _RecordInvalid(f"coupling_kind must be distributed|lumped, got {kind!r}")
        if res_type == "quarter" and kind != "distributed":
            raise _RecordInvalid("quarter-wave resonators require distributed coupling")
        geom = _section(raw, "geometry")
        results = _section(raw, "results")
        f_bare = _num(results, "f_bare", "results")
        if f_bare <= 0:
            raise _RecordInvalid("f_bare must be positive")
        kappa = c_rf = c_cg = None
        if kind == "distributed":
            kappa = _num(results, "kappa", "results")
            if kappa < 0:
                raise _RecordInvalid("kappa must be non-negative")
            if "C_rf" in results or "C_cg" in results:
                raise _RecordInvalid("distributed results must not carry C_rf/C_cg")
        else:
            c_rf = _num(results, "C_rf", "results")
            c_cg = _num(results, "C_cg", "results")
            if c_rf < 0 or c_cg < 0:
                raise _RecordInvalid("C_rf and C_cg must be non-negative")
            if "kappa" in results:
                raise _RecordInvalid("lumped results must not carry kappa")
        z_c = _num(raw, "Z_c", "record")
        if z_c <= 0:
            raise _RecordInvalid("Z_c must be positive")
        return cls(
            id=ident, res_type=res_type, coupling_kind=kind,
            cpw_length=_num(geom, "cpw_length", "geometry"),
            claw_length=_num(geom, "claw_length", "geometry"),
            feedline_coupling_dim=_num(geom, "feedline_coupling_dim", "geometry"),
            f_bare=f_bare, Z_c=z_c,
            sim_meta=_check_sim_meta(raw), provenance=_check_provenance(raw),
            raw=raw, kappa=kappa, C_rf=c_rf, C_cg=c_cg,
        )

    def to_record(self) -> dict:
        rec = copy.deepcopy(self.raw)
        rec["id"] = self.id
        rec["res_type"] = self.res_type
        rec["coupling_kind"] = self.coupling_kind
        rec["Z_c"] = self.Z_c
        rec.setdefault("geometry", {}).update(
            cpw_length=self.cpw_length, claw_length=self.claw_length,
            feedline_coupling_dim=self.feedline_coupling_dim)
        results = rec.setdefault("results", {})
        results["f_bare"] = self.f_bare
        if self.coupling_kind == "distributed":
            results["kappa"] = self.kappa
        else:
            results["C_rf"] = self.C_rf
            results["C_cg"] = self.C_cg
        return rec


@dataclass(frozen=True)
class CouplerEntry:
    """Lumped resonator-feedline coupling capacitor."""

    id: str
    finger_dim: float
    C_rf: float
    C_cg: float
    sim_meta: dict
    provenance: dict
    raw: dict

    @classmethod
    def from_record(cls, raw: dict) -> "CouplerEntry":
        ident = _ident(raw)
        geom = _section(raw, "geometry")
        cm = _section(raw, "cmatrix")
        c_rf = _num(cm, "C_rf", "cmatrix")
        c_cg = _num(cm, "C_cg", "cmatrix")
        if c_rf <= 0:
            raise _RecordInvalid("C_rf must be positive")
        if c_cg < 0:
            raise _RecordInvalid("C_cg must be non-negative")
        return cls(
            id=ident,
            finger_dim=_num(geom, "finger_dim", "geometry"),
            C_rf=c_rf, C_cg=c_cg,
            sim_meta=_check_sim_meta(raw), provenance=_check_provenance(raw),
            raw=raw,
        )

    def to_record(self) -> dict:
        rec = copy.deepcopy(self.raw)
        rec["id"] = self.id
        rec.setdefault("geometry", {}).update(finger_dim=self.finger_dim)
        rec.setdefault("cmatrix", {}).update(C_rf=self.C_rf, C_cg=self.C_cg)
        return rec


@dataclass(frozen=True)
class ValidatedDeviceEntry:
    """Experimentally measured device: spectroscopy plus punchout numbers.

    Frequencies f_01 and f_res in GHz; alpha, kappa, chi_L and g_extracted
    in MHz, matching how such tables are reported.
    """

    id: str
    f_01: float
    alpha: float
    f_res: float
    kappa: float
    chi_L: float
    g_extracted: float
    components: dict
    raw: dict

    @classmethod
    def from_record(cls, raw: dict) -> "ValidatedDeviceEntry":
        ident = _ident(raw)
        meas = _section(raw, "measured")
        vals = {k: _num(meas, k, "measured")
                for k in ("f_01", "alpha", "f_res", "kappa", "chi_L", "g_extracted")}
        if vals["f_01"] <= 0 or vals["f_res"] <= 0:
            raise _RecordInvalid("f_01 and f_res must be positive")
        g_pred_mhz = g_from_lamb(vals["chi_L"] * 1e-3, vals["f_01"], vals["f_res"]) * 1e3
        if abs(g_pred_mhz - vals["g_extracted"]) > 0.02 * abs(g_pred_mhz):
            raise _RecordInvalid(
                f"g_extracted={vals['g_extracted']} MHz deviates more than 2% from "
                f"the Lamb-shift value {g_pred_mhz:.2f} MHz")
        comps = raw.get("components", {})
        if not isinstance(comps, dict):
            raise _RecordInvalid("components must be an object")
        return cls(id=ident, components=comps, raw=raw, **vals)

    def to_record(self) -> dict:
        rec = copy.deepcopy(self.raw)
        rec["id"] = self.id
        rec.setdefault("measured", {}).update(
            f_01=self.f_01, alpha=self.alpha, f_res=self.f_res,
            kappa=self.kappa, chi_L=self.chi_L, g_extracted=self.g_extracted)
        rec["components"] = dict(self.components)
        return rec

    def hamiltonian_params(self) -> HamiltonianParams:
        """Measured values as HamiltonianParams (GHz / MHz convention)."""
        return HamiltonianParams(
            f_q=self.f_01, alpha=self.alpha * 1e-3, f_r=self.f_res,
            kappa=self.kappa, g=self.g_extracted * 1e-3)


@dataclass(frozen=True)
class ComponentStore:
    """Immutable, indexed collections of the four component types."""

    qubits: dict[str, QubitClawEntry]
    resonators: dict[str, ResonatorEntry]
    couplers: dict[str, CouplerEntry]
    validated: dict[str, ValidatedDeviceEntry]
    schema_version: int = SCHEMA_VERSION
    manifest: dict = field(default_factory=dict)
    load_errors: tuple[RecordError, ...] = ()
    # claw_length -> (sorted qubit ids, sorted resonator ids)
    claw_index: dict[float, tuple[tuple[str, ...], tuple[str, ...]]] = field(
        default_factory=dict)

    @staticmethod
    def build(qubits, resonators, couplers, validated, *,
              schema_version=SCHEMA_VERSION, manifest=None,
              load_errors=()) -> "ComponentStore":
        index: dict[float, tuple[list[str], list[str]]] = {}
        for q in qubits.values():
            index.setdefault(q.claw_length, ([], []))[0].append(q.id)
        for r in resonators.values():
            index.setdefault(r.claw_length, ([], []))[1].append(r.id)
        frozen = {k: (tuple(sorted(v[0])), tuple(sorted(v[1])))
                  for k, v in index.items()}
        return ComponentStore(
            qubits=qubits, resonators=resonators, couplers=couplers,
            validated=validated, schema_version=schema_version,
            manifest=manifest or {"schema_version": schema_version},
            load_errors=tuple(load_errors), claw_index=frozen)


@dataclass(frozen=True)
class CandidateDesign:
    """One composed qubit x resonator (x coupler) combination."""

    qubit_id: str
    resonator_id: str
    coupler_id: str | None
    params: HamiltonianParams
    E_J: float
    cost: float | None = None

    def key(self) -> tuple[str, str, str]:
        return (self.qubit_id, self.resonator_id, self.coupler_id or "")

    def with_cost(self, cost: float) -> "CandidateDesign":
        return replace(self, cost=cost)


# ---------------------------------------------------------------------------
# load / write
# ---------------------------------------------------------------------------

_PARSERS = {
    "qubit_claw": QubitClawEntry.from_record,
    "resonator": ResonatorEntry.from_record,
    "coupler": CouplerEntry.from_record,
    "validated": ValidatedDeviceEntry.from_record,
}


def load_components(path: str | Path) -> ComponentStore:
    """Load and validate a store directory.

    Missing record files count as empty collections. Malformed records are
    collected into `store.load_errors` and skipped; duplicate ids within a
    collection, unreadable files and schema mismatches raise StoreError.
    """
    root = Path(path)
    if not root.is_dir():
        raise StoreError(f"store path {root} is not a directory")

    manifest: dict = {"schema_version": SCHEMA_VERSION}
    mpath = root / "manifest.json"
    if mpath.exists():
        try:
            manifest = json.loads(mpath.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise StoreError(f"unreadable manifest {mpath}: {exc}") from exc
    version = manifest.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise StoreError(
            f"schema_version {version} not supported (expected {SCHEMA_VERSION})")

    errors: list[RecordError] = []
    collections: dict[str, dict] = {}
    for kind, fname in _FILES.items():
        fpath = root / fname
        entries: dict[str, object] = {}
        if fpath.exists():
            try:
                text = fpath.read_text(encoding="utf-8")
            except OSError as exc:
                raise StoreError(f"unreadable file {fpath}: {exc}") from exc
            for line_no, line in enumerate(text.splitlines(), start=1):
                if not line.strip():
                    continue
                try:
                    raw = json.loads(line)
                    if not isinstance(raw, dict):
                        raise _RecordInvalid("record is not a JSON object")
                    entry = _PARSERS[kind](raw)
                except (ValueError, json.JSONDecodeError) as exc:
                    # _RecordInvalid plus anything the physics checks raise
                    rid = None
                    try:
                        rid = json.loads(line).get("id")
                    except Exception:
                        pass
                    errors.append(RecordError(fname, line_no, rid, str(exc)))
                    continue
                if entry.id in entries:
                    raise StoreError(f"duplicate id {entry.id!r} in {fname}")
                entries[entry.id] = entry
        collections[kind] = entries

    return ComponentStore.build(
        collections["qubit_claw"], collections["resonator"],
        collections["coupler"], collections["validated"],
        schema_version=version, manifest=manifest, load_errors=errors)


def write_components(store: ComponentStore, path: str | Path) -> None:
    """Write a store back to disk (value-identical round trip).

    Floats go through json.dumps, i.e. shortest round-trip decimals; unknown
    fields carried in the raw records are preserved.
    """
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    manifest = dict(store.manifest)
    manifest["schema_version"] = store.schema_version
    (root / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    for kind, fname in _FILES.items():
        entries = getattr(store, {"qubit_claw": "qubits", "resonator": "resonators",
                                  "coupler": "couplers", "validated": "validated"}[kind])
        lines = [json.dumps(e.to_record(), ensure_ascii=False)
                 for e in entries.values()]
        (root / fname).write_text("\n".join(lines) + ("\n" if lines else ""),
                                  encoding="utf-8")


def sample_store_path() -> Path:
    """Directory with the bundled six-device validated sample set."""
    return Path(str(importlib.resources.files("qdesigndb") / "data" / "sample_store"))


# ---------------------------------------------------------------------------
# composition
# ---------------------------------------------------------------------------

def _claw_groups(store: ComponentStore, claw_tolerance: float):
    """Yield (qubit_ids, resonator_ids) with claw lengths matched.

    At tolerance 0 groups come straight from the index; otherwise resonator
    claws within `claw_tolerance` (relative to the qubit claw length) match.
    """
    if claw_tolerance == 0.0:
        for claw in sorted(store.claw_index):
            q_ids, r_ids = store.claw_index[claw]
            if q_ids and r_ids:
                yield q_ids, r_ids
        return
    claws = sorted(store.claw_index)
    for claw in claws:
        q_ids = store.claw_index[claw][0]
        if not q_ids:
            continue
        r_ids: list[str] = []
        for other in claws:
            if abs(other - claw) <= claw_tolerance * claw:
                r_ids.extend(store.claw_index[other][1])
        if r_ids:
            yield q_ids, tuple(sorted(r_ids))


def _resonator_variants(store: ComponentStore, res: ResonatorEntry, z0: float):
    """Yield (coupler_id, f_r GHz, kappa MHz, C_r fF) for one resonator."""
    c_r = resonator_effective_capacitance(res.f_bare, res.Z_c, res.res_type)
    if res.coupling_kind == "distributed":
        yield None, res.f_bare, res.kappa, c_r
        return
    couplers = sorted(store.couplers)
    if couplers:
        for cid in couplers:
            c = store.couplers[cid]
            f_r, kappa = coupled_res_freq_and_kappa(res.f_bare, c_r, c.C_rf, c.C_cg, z0)
            yield cid, f_r, kappa, c_r
    else:
        # fall back to the reference coupler stored on the entry itself
        f_r, kappa = coupled_res_freq_and_kappa(res.f_bare, c_r, res.C_rf, res.C_cg, z0)
        yield None, f_r, kappa, c_r


def compose_candidates(store: ComponentStore, E_J: float,
                       claw_tolerance: float = 0.0, *, z0: float = 50.0,
                       skip_log: list | None = None) -> Iterator[CandidateDesign]:
    """Lazily yield every claw-matched qubit x resonator (x coupler) design.

    Qubit charging energy uses the total island shunt C_q + C_c. Lumped
    resonators pair with every coupler in the store (their own reference
    coupler when none exist); distributed ones carry their simulated
    (f_bare, kappa) directly. The coupling g is evaluated at the loaded
    resonator frequency. Per-candidate physics failures are recorded in
    skip_log and skipped, never raised.
    """
    if E_J <= 0:
        raise ValueError("E_J must be positive")
    if not 0.0 <= claw_tolerance < 1.0:
        raise ValueError("claw_tolerance must lie in [0, 1)")

    qubit_cache: dict[str, tuple[float, float, float] | None] = {}

    def qubit_side(qid: str):
        if qid not in qubit_cache:
            q = store.qubits[qid]
            try:
                e_c = charging_energy(q.C_q + q.C_c)
                f_q, alpha = transmon_fq_alpha(E_J, e_c)
                qubit_cache[qid] = (e_c, f_q, alpha)
            except (ValueError, ArithmeticError, RuntimeError) as exc:
                qubit_cache[qid] = None
                if skip_log is not None:
                    skip_log.append((qid, None, None, str(exc)))
        return qubit_cache[qid]

    for q_ids, r_ids in _claw_groups(store, claw_tolerance):
        for qid in q_ids:
            side = qubit_side(qid)
            for rid in r_ids:
                res = store.resonators[rid]
                for cid, f_r, kappa, c_r in _resonator_variants(store, res, z0):
                    if side is None:
                        if skip_log is not None:
                            skip_log.append((qid, rid, cid, "qubit physics failed"))
                        continue
                    e_c, f_q, alpha = side
                    q = store.qubits[qid]
                    try:
                        g = coupling_g_capacitive(q.C_c, q.C_q, c_r, f_r, E_J, e_c)
                        params = HamiltonianParams(
                            f_q=f_q, alpha=alpha, f_r=f_r, kappa=kappa, g=g)
                    except (ValueError, ArithmeticError, RuntimeError) as exc:
                        if skip_log is not None:
                            skip_log.append((qid, rid, cid, str(exc)))
                        continue
                    yield CandidateDesign(qubit_id=qid, resonator_id=rid,
                                          coupler_id=cid, params=params, E_J=E_J)


def store_stats(store: ComponentStore) -> dict:
    """Collection counts plus composed-candidate count by index arithmetic.

    The composed count (claw tolerance 0) is a sum over claw-match groups of
    |Q_group| * |R_group| with lumped resonators fanned out over couplers,
    never an enumeration.
    """
    n_coup = len(store.couplers)
    lumped_factor = n_coup if n_coup else 1
    n_dist = sum(1 for r in store.resonators.values()
                 if r.coupling_kind == "distributed")
    n_lump = len(store.resonators) - n_dist

    composed = 0
    for q_ids, r_ids in _claw_groups(store, 0.0):
        dist = sum(1 for rid in r_ids
                   if store.resonators[rid].coupling_kind == "distributed")
        lump = len(r_ids) - dist
        composed += len(q_ids) * (dist + lump * lumped_factor)

    return {
        "qubit_claws": len(store.qubits),
        "resonators": len(store.resonators),
        "couplers": n_coup,
        "validated_devices": len(store.validated),
        "resonator_combinations": n_dist + n_lump * lumped_factor,
        "composed_candidates": composed,
    }
