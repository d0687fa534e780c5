"""Command-line entry points: build-tasks, run, baseline, score, report,
serve, replay."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .annotation import ResponseStore, merge_human_responses, serve_annotation
from .config import HarnessConfig, load_config
from .dataset import load_dataset
from .gateway import Gateway, HttpTransport, ReplayTransport, RequestLog
from .prompts import PromptPack
from .reporting import build_report, report_markdown, save_report
from .runner import (
    ModelConfig,
    baseline_frequent,
    baseline_random,
    load_run,
    run_discriminative,
    run_generative,
    save_run,
)
from .tasks import build_tasks, load_task_manifest, write_task_manifest


def _config(args) -> HarnessConfig:
    return load_config(args.config) if args.config else HarnessConfig()


def _prompts(cfg: HarnessConfig) -> PromptPack:
    return PromptPack(cfg.prompt_pack_dir)


def cmd_build_tasks(args) -> int:
    cfg = _config(args)
    dataset = load_dataset(args.dataset)
    for err in dataset.errors:
        print(f"rejected line {err.line}: {err.message}", file=sys.stderr)
    configs = cfg.task_configs
    if not configs:
        print("no task_configs in config file", file=sys.stderr)
        return 2
    tasks, skips = build_tasks(dataset, configs, base_seed=cfg.seed)
    for skip in skips:
        print(f"skipped {skip.kind}/{skip.video_id}: {skip.reason}", file=sys.stderr)
    if args.train:
        # attach five-shot exemplars to generative tasks at build time
        from .tasks import attach_few_shot, select_few_shot

        train = load_dataset(args.train)
        by_id = {r.video_id: r for r in dataset.records}
        tasks = [
            attach_few_shot(t, select_few_shot(by_id[t.video_id], train, seed=cfg.seed))
            if t.kind in ("creation", "explanation") and t.video_id in by_id
            else t
            for t in tasks
        ]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_task_manifest(tasks, out / "tasks.jsonl", out / "keys.jsonl")
    print(f"wrote {len(tasks)} tasks ({len(skips)} skipped) to {out}")
    return 0


def _gateway_for(cfg: HarnessConfig, endpoint_name: str, log: RequestLog) -> tuple[Gateway, ModelConfig]:
    endpoint = cfg.endpoint(endpoint_name)
    transport = HttpTransport(endpoint)
    gateway = Gateway(transport, log=log, max_in_flight=cfg.max_in_flight)
    return gateway, ModelConfig.from_endpoint(endpoint)


def cmd_run(args) -> int:
    cfg = _config(args)
    tasks = load_task_manifest(args.tasks, args.keys)
    log = RequestLog()
    gateway, model_cfg = _gateway_for(cfg, args.endpoint, log)
    prompts = _prompts(cfg)
    resume = None
    if args.resume:
        resume = load_run(args.resume)
    if args.mode == "discriminative":
        from .runner import RunAborted

        try:
            record = run_discriminative(
                tasks,
                model_cfg,
                gateway,
                prompt_pack=prompts,
                max_workers=cfg.max_in_flight,
                resume=resume,
            )
        except RunAborted as e:
            run_dir = save_run(e.partial, args.out, gateway=gateway)
            print(f"aborted: {e}; partial record saved to {run_dir}", file=sys.stderr)
            return 3
    else:
        judge_gateway = None
        if args.judge and cfg.judge_endpoint:
            judge_gateway, _ = _gateway_for(cfg, cfg.judge_endpoint, log)
        record = run_generative(
            tasks,
            args.mode,
            model_cfg,
            gateway,
            prompt_pack=prompts,
            judge_gateway=judge_gateway,
            save_traces_to=Path(args.out) / "traces" if args.mode == "rot" else None,
        )
    run_dir = save_run(record, args.out, gateway=gateway)
    print(f"run {record.run_id} saved to {run_dir}")
    print(json.dumps(record.aggregates, ensure_ascii=False, indent=2, sort_keys=True))
    return 0


def cmd_baseline(args) -> int:
    tasks = load_task_manifest(args.tasks, args.keys)
    if args.kind == "random":
        record = baseline_random(tasks, trials=args.trials, seed=args.seed)
    else:
        record = baseline_frequent(tasks)
    run_dir = save_run(record, args.out)
    print(f"baseline {record.run_id} saved to {run_dir}")
    print(json.dumps(record.aggregates, ensure_ascii=False, indent=2, sort_keys=True))
    return 0


def cmd_score(args) -> int:
    from .runner import aggregate_discriminative, aggregate_generative

    record = load_run(args.run)
    tasks = load_task_manifest(args.tasks, args.keys)
    wanted = set(record.config.get("task_ids", []))
    tasks = [t for t in tasks if t.task_id in wanted]
    if record.kind in ("selection", "ranking", "classification"):
        record.aggregates = aggregate_discriminative(tasks, record.entries)
    else:
        record.aggregates = aggregate_generative(tasks, record.entries)
    run_dir = save_run(record, Path(args.run).parent)
    print(f"rescored {record.run_id} in {run_dir}")
    print(json.dumps(record.aggregates, ensure_ascii=False, indent=2, sort_keys=True))
    return 0


def cmd_report(args) -> int:
    records = [load_run(d) for d in args.runs]
    human = None
    if args.human_store and args.tasks:
        tasks = load_task_manifest(args.tasks, args.keys)
        human = merge_human_responses(ResponseStore(args.human_store), tasks)
    report = build_report(records, human=human)
    if args.out:
        save_report(report, args.out)
        print(f"report written to {args.out}")
    else:
        print(report_markdown(report))
    return 0


def cmd_serve(args) -> int:
    tasks = load_task_manifest(args.tasks, args.keys)
    store = ResponseStore(args.store)
    host, _, port = args.bind.partition(":")
    server = serve_annotation(
        (host or "127.0.0.1", int(port or "8000")),
        tasks,
        store,
        seed=args.seed,
        static_dir=args.static,
    )
    host, port = server.address
    print(f"annotation service on http://{host}:{port} ({len(tasks)} tasks)")
    try:
        server.httpd.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
    return 0


def cmd_replay(args) -> int:
    cfg = _config(args)
    record = load_run(args.run)
    tasks = load_task_manifest(args.tasks, args.keys)
    wanted = set(record.config.get("task_ids", []))
    tasks = [t for t in tasks if t.task_id in wanted]
    transport = ReplayTransport.from_log(Path(args.run) / "requests.jsonl")
    gateway = Gateway(transport)
    model_cfg = ModelConfig(model_id=record.config.get("model", "replay"))
    replayed = run_discriminative(tasks, model_cfg, gateway, prompt_pack=_prompts(cfg))
    same = replayed.aggregates == record.aggregates
    print(json.dumps(replayed.aggregates, ensure_ascii=False, indent=2, sort_keys=True))
    print("aggregates identical" if same else "aggregates DIFFER from the recorded run")
    return 0 if same else 1


def main(argv: "list[str] | None" = None) -> int:
    parser = argparse.ArgumentParser(prog="commentart")
    parser.add_argument("--config", help="harness config file (YAML/JSON)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-tasks", help="construct task manifests from a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--train", help="training split for five-shot exemplar attachment")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_tasks)

    p = sub.add_parser("run", help="run a model over a task manifest")
    p.add_argument("--tasks", required=True)
    p.add_argument("--keys", required=True)
    p.add_argument("--endpoint", required=True)
    p.add_argument("--mode", default="discriminative",
                   choices=["discriminative", "plain", "five_shot", "rot"])
    p.add_argument("--judge", action="store_true", help="judge generative outputs")
    p.add_argument("--resume", help="run directory of a partial record to resume")
    p.add_argument("--out", default="runs")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("baseline", help="gateway-free heuristic baselines")
    p.add_argument("--kind", choices=["random", "frequent"], required=True)
    p.add_argument("--tasks", required=True)
    p.add_argument("--keys", required=True)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="runs")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("score", help="recompute aggregates from persisted entries")
    p.add_argument("--run", required=True)
    p.add_argument("--tasks", required=True)
    p.add_argument("--keys", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("report", help="leaderboard across runs")
    p.add_argument("--runs", nargs="*", default=[])
    p.add_argument("--human-store")
    p.add_argument("--tasks")
    p.add_argument("--keys")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="annotation HTTP service")
    p.add_argument("--tasks", required=True)
    p.add_argument("--keys", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--bind", default="127.0.0.1:8000")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--static", help="directory with the annotation UI build")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("replay", help="re-run a recorded run offline and compare")
    p.add_argument("--run", required=True)
    p.add_argument("--tasks", required=True)
    p.add_argument("--keys", required=True)
    p.set_defaults(func=cmd_replay)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
