"""Admin CLI: serve, replay, export, metrics, seed, and simulator commands.

Flags can be overridden by environment variables prefixed CROWDSCRIBE_
(e.g. CROWDSCRIBE_SERVE_PORT for serve --port).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .core import ServerCore, replay_file
from .document import export as export_doc
from .eventlog import read_log
from .sim import Transcript, fixture_paper_scale, run_transcript


def open_server(data_dir: str | None, page_height: int = 40, rng_seed: int = 0) -> ServerCore:
    """Boot a server, replaying any existing log under data_dir.

    The first boot records (page_height, rng_seed) in meta.json; later boots
    reuse the stored values so replay stays deterministic across restarts.
    """
    if data_dir is None:
        return ServerCore(page_height=page_height, rng_seed=rng_seed)
    root = Path(data_dir)
    root.mkdir(parents=True, exist_ok=True)
    meta_path = root / "meta.json"
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
        page_height = meta["page_height"]
        rng_seed = meta["rng_seed"]
    else:
        meta_path.write_text(json.dumps({"page_height": page_height, "rng_seed": rng_seed}))
    core = ServerCore(data_dir=root, page_height=page_height, rng_seed=rng_seed)
    log_path = root / "events.log"
    if log_path.exists():
        for event in read_log(log_path):
            core.apply_event(event)
    return core


@click.group()
def main():
    """Crowd-writing orchestration service."""


@main.command()
@click.option("--port", default=8100, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", default=None, help="Directory for the event log; omit for in-memory.")
@click.option("--page-height", default=40, show_default=True)
@click.option("--seed", default=0, show_default=True, help="Seed for task randomization.")
def serve(port, host, data_dir, page_height, seed):
    """Run the HTTP server."""
    import uvicorn

    from .http_api import build_app

    core = open_server(data_dir, page_height=page_height, rng_seed=seed)
    click.echo(f"serving on {host}:{port} (docs: {len(core.docs)})", err=True)
    uvicorn.run(build_app(core), host=host, port=port, log_level="warning")


@main.command()
@click.argument("log_file", type=click.Path(exists=True))
@click.option("--digest", "digest_only", is_flag=True, help="Print only the state digest.")
@click.option("--page-height", default=40, show_default=True)
@click.option("--seed", default=0, show_default=True)
def replay(log_file, digest_only, page_height, seed):
    """Rebuild state from an event log and print a summary or digest."""
    core = replay_file(log_file, page_height=page_height, rng_seed=seed)
    if digest_only:
        click.echo(core.state_digest())
        return
    click.echo(json.dumps({
        "digest": core.state_digest(),
        "documents": {doc_id: doc.revision for doc_id, doc in core.docs.items()},
        "events": core.events[-1].seq if core.events else 0,
    }, indent=2))


@main.command()
@click.argument("doc_id")
@click.option("--format", "fmt", type=click.Choice(["structured", "plain"]), default="structured", show_default=True)
@click.option("--data-dir", required=True)
def export(doc_id, fmt, data_dir):
    """Export a document in the structured interchange form or as plain text."""
    core = open_server(data_dir)
    doc = core.docs.get(doc_id)
    if doc is None:
        click.echo(f"no document {doc_id}", err=True)
        sys.exit(1)
    sys.stdout.buffer.write(export_doc(doc, fmt))
    sys.stdout.buffer.write(b"\n")


@main.command()
@click.argument("doc_id")
@click.option("--data-dir", required=True)
def metrics(doc_id, data_dir):
    """Print the workflow metrics for a document."""
    from .suggestions import classify_metrics

    core = open_server(data_dir)
    if doc_id not in core.docs:
        click.echo(f"no document {doc_id}", err=True)
        sys.exit(1)
    summary = classify_metrics([e for e in core.events if e.doc_id == doc_id])
    click.echo(json.dumps(summary.to_record(), indent=2))


@main.command()
@click.argument("outline_file", type=click.Path(exists=True))
@click.argument("tasks_file", type=click.Path(exists=True), required=False)
@click.option("--data-dir", required=True)
@click.option("--author", "author_id", default="author", show_default=True)
def seed(outline_file, tasks_file, data_dir, author_id):
    """Create a document from an outline file plus optional task templates."""
    templates = []
    if tasks_file:
        templates = json.loads(Path(tasks_file).read_text(encoding="utf-8"))
    core = open_server(data_dir)
    session = core.create_session(author_id, "author")
    out = core.handle("create_document", session.token, {
        "seed_outline": Path(outline_file).read_text(encoding="utf-8"),
        "task_templates": templates,
    })
    click.echo(json.dumps(out))


@main.group()
def sim():
    """Scripted crowd simulation."""


@sim.command("run")
@click.argument("transcript_file", type=click.Path(exists=True))
@click.option("--digest", "digest_only", is_flag=True, help="Print only the final digest.")
def sim_run(transcript_file, digest_only):
    """Run a transcript against a fresh in-memory server."""
    transcript = Transcript.load(transcript_file)
    server = ServerCore(rng_seed=transcript.seed)
    report = run_transcript(server, transcript)
    if digest_only:
        click.echo(report.final_digest)
    else:
        click.echo(json.dumps(report.to_record(), indent=2))


@sim.command("fixture-paper-scale")
@click.option("--out", "out_file", required=True, type=click.Path())
def sim_fixture(out_file):
    """Write the reference fixture transcript: one full paper's worth of
    crowd-writing activity with exact metric totals."""
    transcript = fixture_paper_scale()
    transcript.save(out_file)
    click.echo(f"wrote {len(transcript.actions)} actions to {out_file}", err=True)


def entry() -> None:
    main(auto_envvar_prefix="CROWDSCRIBE")


if __name__ == "__main__":
    entry()
