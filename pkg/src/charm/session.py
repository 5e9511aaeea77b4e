"""Versioned history of generations with bit-exact persistence.

A session is an append-only list of immutable versions, each snapshotting
the inputs (prompt, adjustment, seed) and outputs (image, explanation) of
one generation. History forms a tree via parent links (inpainting forks
from its source version) displayed linearly by id.

Archive layout: one directory per session holding ``session.json`` plus
``ver<id>.png`` images, ``ver<id>.chex`` heatmap sidecars, and
``ver<id>.mask.png`` inpaint masks, with a CRC-32 per artifact recorded in
the manifest.
"""

from __future__ import annotations

import json
import threading
import uuid
import zlib
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .attention import AttentionAdjustment
from .errors import CorruptSession, UnknownParent, UnknownVersion

SCHEMA_VERSION = 1
KINDS = ("diffuse", "adjust", "inpaint")


@dataclass(frozen=True)
class Version:
    id: int
    parent: int | None
    prompt: str
    adjustment: AttentionAdjustment
    seed: int
    kind: str
    created_at: str
    image_ref: str
    explanation_ref: str | None = None
    explanation: dict | None = None
    mask_ref: str | None = None
    strength: float | None = None

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "parent": self.parent,
            "prompt": self.prompt,
            "adjustment": self.adjustment.to_json(),
            "seed": self.seed,
            "kind": self.kind,
            "created_at": self.created_at,
            "image_ref": self.image_ref,
            "explanation_ref": self.explanation_ref,
            "explanation": self.explanation,
            "mask_ref": self.mask_ref,
            "strength": self.strength,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Version":
        return cls(
            id=doc["id"],
            parent=doc["parent"],
            prompt=doc["prompt"],
            adjustment=AttentionAdjustment.from_json(doc["adjustment"]),
            seed=doc["seed"],
            kind=doc["kind"],
            created_at=doc["created_at"],
            image_ref=doc["image_ref"],
            explanation_ref=doc.get("explanation_ref"),
            explanation=doc.get("explanation"),
            mask_ref=doc.get("mask_ref"),
            strength=doc.get("strength"),
        )


@dataclass
class Session:
    id: str
    versions: list[Version] = field(default_factory=list)
    selected: list[int] = field(default_factory=list)
    blobs: dict[str, bytes] = field(default_factory=dict)

    def get(self, version_id: int) -> Version:
        if not 0 <= version_id < len(self.versions):
            raise UnknownVersion(f"version {version_id} not in session {self.id}")
        return self.versions[version_id]

    def blob(self, ref: str) -> bytes:
        if ref not in self.blobs:
            raise UnknownVersion(f"artifact {ref!r} not in session {self.id}")
        return self.blobs[ref]

    def select(self, ids: list[int]) -> None:
        if len(ids) > 2:
            raise ValueError("at most two versions can be selected")
        for vid in ids:
            self.get(vid)
        self.selected = list(ids)


def new_session() -> Session:
    return Session(id=uuid.uuid4().hex)


def commit(
    session: Session,
    *,
    prompt: str,
    adjustment: AttentionAdjustment,
    seed: int,
    kind: str,
    image_png: bytes,
    explanation_chex: bytes | None = None,
    explanation: dict | None = None,
    mask_png: bytes | None = None,
    parent: int | None = None,
    strength: float | None = None,
) -> Version:
    """Append an immutable version with the next dense id."""
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    if parent is not None and not 0 <= parent < len(session.versions):
        raise UnknownParent(f"parent {parent} not in session {session.id}")
    vid = len(session.versions)
    image_ref = f"ver{vid}.png"
    session.blobs[image_ref] = image_png
    explanation_ref = None
    if explanation_chex is not None:
        explanation_ref = f"ver{vid}.chex"
        session.blobs[explanation_ref] = explanation_chex
    mask_ref = None
    if mask_png is not None:
        mask_ref = f"ver{vid}.mask.png"
        session.blobs[mask_ref] = mask_png
    version = Version(
        id=vid,
        parent=parent,
        prompt=prompt,
        adjustment=adjustment,
        seed=seed,
        kind=kind,
        created_at=datetime.now(timezone.utc).isoformat(),
        image_ref=image_ref,
        explanation_ref=explanation_ref,
        explanation=explanation,
        mask_ref=mask_ref,
        strength=strength,
    )
    session.versions.append(version)
    return version


# ------------------------------------------------------------------ diffing


def lcs_edit_script(a: list[str], b: list[str]) -> list[dict]:
    """Longest-common-subsequence edit script over token lists.

    Returns runs of {"op": "equal"|"delete"|"insert", "tokens": [...]};
    ties in the DP backtrack prefer deletions so output is deterministic.
    """
    n, m = len(a), len(b)
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            if a[i] == b[j]:
                dp[i][j] = dp[i + 1][j + 1] + 1
            else:
                dp[i][j] = max(dp[i + 1][j], dp[i][j + 1])
    ops: list[tuple[str, str]] = []
    i = j = 0
    while i < n and j < m:
        if a[i] == b[j]:
            ops.append(("equal", a[i]))
            i += 1
            j += 1
        elif dp[i + 1][j] >= dp[i][j + 1]:
            ops.append(("delete", a[i]))
            i += 1
        else:
            ops.append(("insert", b[j]))
            j += 1
    ops.extend(("delete", tok) for tok in a[i:])
    ops.extend(("insert", tok) for tok in b[j:])

    runs: list[dict] = []
    for op, tok in ops:
        if runs and runs[-1]["op"] == op:
            runs[-1]["tokens"].append(tok)
        else:
            runs.append({"op": op, "tokens": [tok]})
    return runs


def diff(session: Session, a: int, b: int) -> dict:
    """Token-level prompt diff plus per-token gamma deltas between versions."""
    from .text import tokenize

    va, vb = session.get(a), session.get(b)
    ta, tb = tokenize(va.prompt).texts, tokenize(vb.prompt).texts
    script = [] if ta == tb else lcs_edit_script(ta, tb)

    indices = set(va.adjustment.entries) | set(vb.adjustment.entries)
    delta = [
        {
            "token_index": j,
            "a_gamma": va.adjustment.gamma(j),
            "b_gamma": vb.adjustment.gamma(j),
        }
        for j in sorted(indices)
        if va.adjustment.gamma(j) != vb.adjustment.gamma(j)
    ]
    return {
        "a": a,
        "b": b,
        "prompt_diff": script,
        "adjustment_delta": delta,
        "images": [va.image_ref, vb.image_ref],
    }


# -------------------------------------------------------------- persistence


def persist(session: Session, path: str | Path) -> Path:
    """Write the session archive; returns the directory written."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    checksums = {}
    for ref, blob in sorted(session.blobs.items()):
        (root / ref).write_bytes(blob)
        checksums[ref] = zlib.crc32(blob) & 0xFFFFFFFF
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "session_id": session.id,
        "selected": session.selected,
        "versions": [v.to_json() for v in session.versions],
        "checksums": checksums,
    }
    (root / "session.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
    )
    return root


def load(path: str | Path) -> Session:
    """Read a session archive, verifying every artifact checksum."""
    root = Path(path)
    manifest_path = root / "session.json"
    if not manifest_path.exists():
        raise CorruptSession(f"no session.json under {root}")
    try:
        manifest = json.loads(manifest_path.read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise CorruptSession(f"unparseable manifest: {exc}") from exc
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise CorruptSession(f"unsupported schema_version {manifest.get('schema_version')}")
    blobs = {}
    for ref, crc in manifest.get("checksums", {}).items():
        blob_path = root / ref
        if not blob_path.exists():
            raise CorruptSession(f"missing artifact {ref}")
        blob = blob_path.read_bytes()
        if (zlib.crc32(blob) & 0xFFFFFFFF) != crc:
            raise CorruptSession(f"checksum mismatch for {ref}")
        blobs[ref] = blob
    versions = [Version.from_json(doc) for doc in manifest["versions"]]
    for v in versions:
        for ref in (v.image_ref, v.explanation_ref, v.mask_ref):
            if ref is not None and ref not in blobs:
                raise CorruptSession(f"version {v.id} references missing {ref}")
    return Session(
        id=manifest["session_id"],
        versions=versions,
        selected=list(manifest.get("selected", [])),
        blobs=blobs,
    )


class SessionStore:
    """Directory of session archives with single-writer commits per session.

    Sessions are flushed to disk on every mutation, so a restarted process
    sees exactly the committed history.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._cache: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def _lock(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(session_id, threading.Lock())

    def create(self) -> Session:
        session = new_session()
        with self._lock(session.id):
            self._cache[session.id] = session
            persist(session, self.root / session.id)
        return session

    def ids(self) -> list[str]:
        on_disk = {p.name for p in self.root.iterdir() if (p / "session.json").exists()}
        return sorted(on_disk | set(self._cache))

    def get(self, session_id: str) -> Session:
        if session_id in self._cache:
            return self._cache[session_id]
        path = self.root / session_id
        if not (path / "session.json").exists():
            raise UnknownVersion(f"no session {session_id}")
        session = load(path)
        self._cache[session_id] = session
        return session

    def commit(self, session_id: str, **fields) -> Version:
        with self._lock(session_id):
            session = self.get(session_id)
            version = commit(session, **fields)
            persist(session, self.root / session_id)
            return version

    def select(self, session_id: str, ids: list[int]) -> None:
        with self._lock(session_id):
            session = self.get(session_id)
            session.select(ids)
            persist(session, self.root / session_id)

    def flush(self) -> None:
        for session_id, session in self._cache.items():
            with self._lock(session_id):
                persist(session, self.root / session_id)
