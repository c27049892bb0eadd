"""File-based project persistence: one directory per project with a JSON
manifest, content-addressed artefact blobs, saved models, and run transcripts.
Writes are serialised per project; reads work on immutable snapshots.
"""
from __future__ import annotations

import hashlib
import json
import threading
from pathlib import Path

from .ids import new_id

ALLOWED_IMAGE_TYPES = {
    "image/png": "png",
    "image/jpeg": "jpg",
    "image/bmp": "bmp",
    "image/gif": "gif",
}


class UnknownProject(KeyError):
    pass


class ProjectStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def lock(self, project_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(project_id, threading.Lock())

    def _dir(self, project_id: str) -> Path:
        d = self.root / project_id
        if not (d / "project.json").exists():
            raise UnknownProject(project_id)
        return d

    # -- manifest --------------------------------------------------------------

    def create(self, name: str, system_context: str = "") -> dict:
        project_id = new_id()
        d = self.root / project_id
        (d / "artifacts").mkdir(parents=True)
        (d / "runs").mkdir()
        manifest = {
            "id": project_id,
            "name": name,
            "system_context": system_context,
            "artifacts": [],
            "phases": [],
            "run_id": None,
            "portfolio_history": [],
        }
        self._write_manifest(d, manifest)
        return manifest

    def get(self, project_id: str) -> dict:
        return json.loads((self._dir(project_id) / "project.json").read_text())

    def save(self, project_id: str, manifest: dict) -> None:
        self._write_manifest(self._dir(project_id), manifest)

    @staticmethod
    def _write_manifest(d: Path, manifest: dict) -> None:
        tmp = d / "project.json.tmp"
        tmp.write_text(json.dumps(manifest, indent=2) + "\n")
        tmp.replace(d / "project.json")

    def list_projects(self) -> list[dict]:
        out = []
        for p in sorted(self.root.iterdir()):
            if (p / "project.json").exists():
                out.append(json.loads((p / "project.json").read_text()))
        return out

    # -- artefacts -------------------------------------------------------------

    def add_artifact(self, project_id: str, content: bytes,
                     filename: str, content_type: str) -> dict:
        if content_type not in ALLOWED_IMAGE_TYPES:
            raise ValueError(
                f"unsupported artefact type {content_type!r}; expected one of "
                + ", ".join(sorted(ALLOWED_IMAGE_TYPES)))
        digest = hashlib.sha256(content).hexdigest()
        d = self._dir(project_id)
        (d / "artifacts" / digest).write_bytes(content)
        entry = {"sha256": digest, "filename": filename,
                 "content_type": content_type}
        manifest = self.get(project_id)
        if not any(a["sha256"] == digest for a in manifest["artifacts"]):
            manifest["artifacts"].append(entry)
            self.save(project_id, manifest)
        return entry

    def read_artifact(self, project_id: str, digest: str) -> bytes:
        path = self._dir(project_id) / "artifacts" / digest
        if not path.exists():
            raise UnknownProject(digest)
        return path.read_bytes()

    # -- documents and runs ----------------------------------------------------

    def write_doc(self, project_id: str, name: str, text: str) -> None:
        (self._dir(project_id) / name).write_text(text, encoding="utf-8")

    def read_doc(self, project_id: str, name: str) -> str:
        path = self._dir(project_id) / name
        if not path.exists():
            raise UnknownProject(name)
        return path.read_text(encoding="utf-8")

    def runs_dir(self, project_id: str) -> Path:
        return self._dir(project_id) / "runs"
