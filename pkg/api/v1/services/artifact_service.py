import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Union

from api.v1.models.artifact import Artifact, RunManifest
from api.v1.models.base import _plain

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


class ArtifactService:

    @staticmethod
    def register(manifest: RunManifest, directory: Union[str, Path], path: Union[str, Path], kind: str) -> Artifact:
        """Record a file already written under the run directory"""
        path = Path(path)
        data = path.read_bytes()
        artifact = Artifact(
            name=path.relative_to(Path(directory)).as_posix(),
            kind=kind,
            sha256=hashlib.sha256(data).hexdigest(),
            size=len(data),
        )
        manifest.artifacts = [a for a in manifest.artifacts if a.name != artifact.name] + [artifact]
        logger.debug("stage=artifacts op=register name=%s kind=%s size=%d", artifact.name, kind, artifact.size)
        return artifact

    @staticmethod
    def dumps(payload: Any) -> str:
        return json.dumps(_plain(payload), indent=2, sort_keys=True) + "\n"

    @staticmethod
    def write_json(manifest: RunManifest, directory: Union[str, Path], name: str, payload: Any) -> Path:
        path = Path(directory) / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(ArtifactService.dumps(payload))
        ArtifactService.register(manifest, directory, path, "json")
        return path

    @staticmethod
    def write_text(manifest: RunManifest, directory: Union[str, Path], name: str, text: str, kind: str = "text") -> Path:
        path = Path(directory) / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        ArtifactService.register(manifest, directory, path, kind)
        return path

    @staticmethod
    def write_manifest(manifest: RunManifest, directory: Union[str, Path]) -> Path:
        path = Path(directory) / MANIFEST_NAME
        path.write_text(ArtifactService.dumps(manifest))
        logger.info("stage=artifacts op=manifest files=%d dir=%s", len(manifest.artifacts), directory)
        return path
