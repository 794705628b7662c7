"""Web tools behind a registry: live adapters plus an offline fixture corpus.

The live search adapter speaks the Serper request shape and the page reader
speaks the Jina-reader shape; the fixture toolkit mirrors their response
shapes so scripted runs look identical to live ones downstream.
"""

from __future__ import annotations

import json
import logging
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol

from .errors import EndpointError, FixtureMiss

logger = logging.getLogger(__name__)

DEFAULT_TRUNCATE = 6000


@dataclass
class ToolResult:
    tool: str
    input: str
    output: str
    source: str = ""

    def to_dict(self) -> dict:
        return {"tool": self.tool, "input": self.input, "output": self.output, "source": self.source}


def normalize_query(query: str) -> str:
    return re.sub(r"\s+", " ", query.strip().lower())


def normalize_url(url: str) -> str:
    return url.strip()


class Toolkit(Protocol):
    def search(self, query: str) -> list[ToolResult]: ...

    def browse(self, url: str) -> ToolResult: ...


class FixtureToolkit:
    """Serves search hits and page texts from an in-memory corpus.

    ``search_index`` maps a normalized query to a list of
    ``{"title", "url", "snippet"}`` hits; ``pages`` maps a url to page text.
    """

    def __init__(
        self,
        search_index: dict[str, list[dict]] | None = None,
        pages: dict[str, str] | None = None,
        truncate: int = DEFAULT_TRUNCATE,
    ):
        self.search_index = {normalize_query(k): v for k, v in (search_index or {}).items()}
        self.pages = {normalize_url(k): v for k, v in (pages or {}).items()}
        self.truncate = truncate

    @classmethod
    def from_dir(cls, directory: str | Path, truncate: int = DEFAULT_TRUNCATE) -> "FixtureToolkit":
        search_index: dict[str, list[dict]] = {}
        pages: dict[str, str] = {}
        for path in sorted(Path(directory).glob("*.json")):
            doc = json.loads(path.read_text(encoding="utf-8"))
            if doc.get("type") == "search":
                search_index[doc["query"]] = doc.get("results", [])
            elif doc.get("type") == "page":
                pages[doc["url"]] = doc.get("text", "")
        return cls(search_index, pages, truncate)

    def dump_dir(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for i, (query, results) in enumerate(sorted(self.search_index.items())):
            (directory / f"search_{i:03d}.json").write_text(
                json.dumps({"type": "search", "query": query, "results": results}, indent=2, ensure_ascii=False),
                encoding="utf-8",
            )
        for i, (url, text) in enumerate(sorted(self.pages.items())):
            (directory / f"page_{i:03d}.json").write_text(
                json.dumps({"type": "page", "url": url, "text": text}, indent=2, ensure_ascii=False),
                encoding="utf-8",
            )

    def search(self, query: str) -> list[ToolResult]:
        key = normalize_query(query)
        if key not in self.search_index:
            raise FixtureMiss("search", key)
        hits = self.search_index[key]
        return [
            ToolResult(
                tool="search",
                input=query,
                output=f"{hit.get('title', '')} — {hit.get('url', '')}\n{hit.get('snippet', '')}"[: self.truncate],
                source=f"rank:{rank} {hit.get('url', '')}",
            )
            for rank, hit in enumerate(hits, start=1)
        ]

    def browse(self, url: str) -> ToolResult:
        key = normalize_url(url)
        if key not in self.pages:
            raise FixtureMiss("page", key)
        return ToolResult(tool="browse", input=url, output=self.pages[key][: self.truncate], source=url)


def _default_get(url: str, headers: dict, timeout: float) -> str:
    import requests

    resp = requests.get(url, headers=headers, timeout=timeout)
    resp.raise_for_status()
    return resp.text


def _default_post(url: str, payload: dict, headers: dict, timeout: float) -> dict:
    import requests

    resp = requests.post(url, json=payload, headers=headers, timeout=timeout)
    resp.raise_for_status()
    return resp.json()


class LiveToolkit:
    """Live adapters for a Serper-style search API and a reader-style page API."""

    def __init__(
        self,
        search_api_key: str | None = None,
        search_base_url: str = "https://google.serper.dev",
        reader_base_url: str | None = None,
        truncate: int = DEFAULT_TRUNCATE,
        post: Callable | None = None,
        get: Callable | None = None,
    ):
        self.search_api_key = search_api_key or os.environ.get("SEARCH_API_KEY", "")
        self.search_base_url = search_base_url.rstrip("/")
        self.reader_base_url = (reader_base_url or os.environ.get("READER_BASE_URL", "https://r.jina.ai")).rstrip("/")
        self.truncate = truncate
        self.post = post or _default_post
        self.get = get or _default_get

    def search(self, query: str) -> list[ToolResult]:
        try:
            doc = self.post(
                f"{self.search_base_url}/search",
                {"q": query},
                {"X-API-KEY": self.search_api_key, "Content-Type": "application/json"},
                30.0,
            )
        except Exception as e:
            raise EndpointError(f"search endpoint failed: {e}") from e
        results = []
        for rank, hit in enumerate(doc.get("organic", []), start=1):
            output = f"{hit.get('title', '')} — {hit.get('link', '')}\n{hit.get('snippet', '')}"
            results.append(
                ToolResult(tool="search", input=query, output=output[: self.truncate], source=f"rank:{rank} {hit.get('link', '')}")
            )
        return results

    def browse(self, url: str) -> ToolResult:
        try:
            text = self.get(f"{self.reader_base_url}/{url}", {}, 30.0)
        except Exception as e:
            raise EndpointError(f"reader endpoint failed: {e}") from e
        return ToolResult(tool="browse", input=url, output=text[: self.truncate], source=url)


class ToolRegistry:
    """Name-to-tool dispatch; renders multi-hit searches into one text block."""

    def __init__(self, toolkit: Toolkit):
        self.toolkit = toolkit

    def known(self, name: str) -> bool:
        return name in ("search", "browse")

    def run(self, name: str, input_text: str) -> str:
        if name == "search":
            hits = self.toolkit.search(input_text)
            if not hits:
                return "(no results)"
            return "\n".join(f"{i}. {hit.output}" for i, hit in enumerate(hits, start=1))
        if name == "browse":
            return self.toolkit.browse(input_text).output
        raise KeyError(name)
