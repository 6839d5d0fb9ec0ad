"""Embedding export for external projection (t-SNE, UMAP, ...)."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Mapping, Sequence

from ..providers import EmbedProvider


def export_embeddings(
    image_sets: Mapping[str, Sequence[tuple[str, bytes | Path]]],
    embed_provider: EmbedProvider,
    out_path: str | Path,
) -> int:
    """Write one CSV row per image: set_label, id, v0..v_{d-1}.

    Returns the number of rows written; an empty input yields a header-only
    file.
    """
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    dim = embed_provider.dim
    count = 0
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["set_label", "id"] + [f"v{i}" for i in range(dim)])
        for label in sorted(image_sets):
            for item_id, payload in image_sets[label]:
                if isinstance(payload, Path):
                    payload = payload.read_bytes()
                vector = embed_provider.embed(payload)
                writer.writerow([label, item_id] + [repr(v) for v in vector.values])
                count += 1
    return count
