from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from docrag.config import PipelineConfig
from docrag.ingest import ingest_package
from docrag.pipeline import Backends, QaEngine, load_eval_records

DATA_DIR = Path(__file__).parent / "data"
TOY_PACKAGE = DATA_DIR / "toy_package"
TOY_QA = DATA_DIR / "toy_qa.jsonl"


@pytest.fixture(scope="session")
def toy_ingest():
    return ingest_package(TOY_PACKAGE)


@pytest.fixture(scope="session")
def toy_chunks(toy_ingest):
    return toy_ingest.chunks


@pytest.fixture(scope="session")
def toy_qa_records():
    return load_eval_records(TOY_QA)


@pytest.fixture()
def default_config():
    return PipelineConfig()


@pytest.fixture()
def toy_engine(toy_chunks):
    cfg = PipelineConfig()
    return QaEngine(toy_chunks, cfg, Backends.mocks(cfg))
