"""Command-line entry points: serve, factcheck, evaluate, sweep, mock-backend."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .auditor import DecodingConfig, PLAIN, THRESHOLDED, classify_factuality
from .evalkit import (
    aggregate_report, load_gold, load_predictions, pr_sweep, sweep_to_csv,
)
from .errors import AlignmentError
from .genbackend import ScriptBundle, build_backend, mock_backend_app
from .promptio import PromptTemplate
from .service import ServiceConfig, create_app
from .textmodel import Document, split_sentences


def _load_document(path: str) -> Document:
    p = Path(path)
    if p.suffix == ".json":
        with open(p, encoding="utf-8") as fh:
            return Document.from_payload(json.load(fh))
    return Document.from_payload({"doc_id": p.stem, "text": p.read_text(encoding="utf-8")})


def _load_summary(path: str) -> list[str]:
    p = Path(path)
    if p.suffix == ".json":
        with open(p, encoding="utf-8") as fh:
            payload = json.load(fh)
        if not isinstance(payload, list):
            raise ValueError("summary JSON must be a list of sentences")
        return [str(s) for s in payload]
    return split_sentences(p.read_text(encoding="utf-8"))


def _template(path: str | None) -> PromptTemplate:
    return PromptTemplate.from_file(path) if path else PromptTemplate()


def cmd_serve(args) -> int:
    import uvicorn

    if args.config:
        config = ServiceConfig.from_file(args.config)
    else:
        config = ServiceConfig().with_env_overrides()
    if args.host:
        config.host = args.host
    if args.port:
        config.port = args.port
    uvicorn.run(create_app(config), host=config.host, port=config.port)
    return 0


def cmd_factcheck(args) -> int:
    doc = _load_document(args.doc)
    summary = _load_summary(args.summary)
    backend = build_backend(args.backend)
    cfg = DecodingConfig(
        tau=args.tau, mode=THRESHOLDED if args.tau > 0 else PLAIN,
    )
    report = classify_factuality(
        doc, summary, cfg, backend, template=_template(args.template),
    )
    out = json.dumps(report.to_json(), indent=2, ensure_ascii=False)
    if args.out:
        Path(args.out).write_text(out + "\n", encoding="utf-8")
    else:
        print(out)
    return 0


def cmd_evaluate(args) -> int:
    gold = load_gold(args.gold)
    predictions = load_predictions(args.predictions)
    if len(gold) != len(predictions):
        raise AlignmentError(
            f"{len(gold)} gold records but {len(predictions)} predictions"
        )
    report = aggregate_report(list(zip(gold, predictions)))
    out = json.dumps(report.to_json(), indent=2, ensure_ascii=False)
    if args.report:
        Path(args.report).write_text(out + "\n", encoding="utf-8")
    else:
        print(out)
    return 0


def cmd_sweep(args) -> int:
    gold = load_gold(args.gold)
    backend = build_backend(args.backend)
    taus = [float(t) for t in args.taus.split(",") if t.strip()]
    points = pr_sweep(
        gold, taus, DecodingConfig(), backend, template=_template(args.template),
    )
    sweep_to_csv(points, args.out)
    print(f"wrote {len(points)} sweep points to {args.out}")
    return 0


def cmd_mock_backend(args) -> int:
    import uvicorn

    source = ScriptBundle.from_file(args.script)
    uvicorn.run(mock_backend_app(source), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="claimcheck",
        description="Fact-check generated text against a reference document.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the review service")
    serve.add_argument("--config", help="service config JSON")
    serve.add_argument("--host")
    serve.add_argument("--port", type=int)
    serve.set_defaults(fn=cmd_serve)

    fc = sub.add_parser("factcheck", help="one-shot check of a summary file")
    fc.add_argument("--doc", required=True, help="document text or payload JSON")
    fc.add_argument("--summary", required=True, help="summary text or JSON list")
    fc.add_argument("--tau", type=float, default=0.0)
    fc.add_argument("--backend", default="echo:",
                    help="http(s) URL, mock:<script.json>, or echo:")
    fc.add_argument("--template", help="prompt template JSON")
    fc.add_argument("--out", help="write the report here instead of stdout")
    fc.set_defaults(fn=cmd_factcheck)

    ev = sub.add_parser("evaluate", help="score predictions against gold records")
    ev.add_argument("--predictions", required=True)
    ev.add_argument("--gold", required=True)
    ev.add_argument("--report", help="write the metrics JSON here")
    ev.set_defaults(fn=cmd_evaluate)

    sw = sub.add_parser("sweep", help="threshold sweep over a gold dataset")
    sw.add_argument("--gold", required=True)
    sw.add_argument("--taus", required=True, help="comma-separated thresholds")
    sw.add_argument("--out", required=True, help="CSV output path")
    sw.add_argument("--backend", default="echo:")
    sw.add_argument("--template")
    sw.set_defaults(fn=cmd_sweep)

    mb = sub.add_parser("mock-backend", help="serve a scripted backend over HTTP")
    mb.add_argument("--script", required=True)
    mb.add_argument("--host", default="127.0.0.1")
    mb.add_argument("--port", type=int, default=8100)
    mb.set_defaults(fn=cmd_mock_backend)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
