"""
MoDT - 명령행 진입점
train / predict / eval / bench / plot 서브커맨드.

    python main.py train --dataset iris.csv --schema iris.schema --out m.json
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd

from modt_core.data import build_encoding, encode_features, load_csv, load_dataset, load_schema, one_hot_encode
from modt_core.errors import ModtError, UsageError, WidthMismatch
from modt_core.gating import estimate_expert_count
from modt_core.model_io import load_model, save_model
from modt_core.predict import MoDTModel, evaluate, explain, model_complexity, predict_with_experts
from modt_core.search import BenchmarkProtocol, benchmark, report_markdown
from modt_core.trainer import TrainConfig, train
from modt_core.tree import export_text
from modt_viz.gate_plot import GatePlotSpec, plot_features, render_gating_plot
from modt_viz.tree_plot import TreePlotSpec, render_tree
from utils import ConfigValidator, retry, setup_logger

# Fix Windows console encoding
if sys.platform == 'win32':
    try:
        sys.stdout.reconfigure(encoding='utf-8')
        sys.stderr.reconfigure(encoding='utf-8')
    except Exception:
        pass

logger = logging.getLogger('MoDT.cli')

# ============================================================================
# 출력 파일 쓰기
# ============================================================================

@retry(max_attempts=3, backoff_factor=1.0, exceptions=(PermissionError,))
def write_text(path: Path, text: str) -> None:
    path.write_text(text, encoding='utf-8')


@retry(max_attempts=3, backoff_factor=1.0, exceptions=(PermissionError,))
def write_frame(frame: pd.DataFrame, path: Path, float_format: Optional[str] = None) -> None:
    frame.to_csv(path, index=False, float_format=float_format)


# ============================================================================
# 인자 파싱
# ============================================================================

def _pair(text: str) -> str:
    parts = text.split(',')
    if len(parts) != 2 or not all(p.strip().lstrip('-').isdigit() for p in parts):
        raise argparse.ArgumentTypeError(f"'i,j' 형식이어야 합니다: {text!r}")
    return text


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument('--config', help='key=value 설정 파일')
    p.add_argument('--threads', type=int, help='병렬 워커 수')
    p.add_argument('--log-file', dest='log_file', help='로그 파일 경로')
    verbosity = p.add_mutually_exclusive_group()
    verbosity.add_argument('--verbose', action='store_true', help='DEBUG 로그')
    verbosity.add_argument('--quiet', action='store_true', help='경고 이상만 출력')


def _add_model_hparams(p: argparse.ArgumentParser) -> None:
    p.add_argument('--experts', type=int, help='전문가 수 e (기본 3)')
    p.add_argument('--depth', type=int, help='트리 최대 깊이 d (기본 2)')
    p.add_argument('--seed', type=int, help='난수 seed')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='modt', description='Mixture of Decision Trees')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('train', help='MoDT 학습 후 모델 파일 저장')
    _add_common(p)
    _add_model_hparams(p)
    p.add_argument('--dataset', required=True)
    p.add_argument('--schema', required=True)
    p.add_argument('--out', required=True, help='모델 JSON 경로')
    p.add_argument('--trace', help='반복 기록 CSV (기본: <out>.trace.csv)')
    p.add_argument('--gate', choices=['2d', 'full'])
    p.add_argument('--gamma', type=float)
    p.add_argument('--iterations', type=int)
    p.add_argument('--tol', type=float)
    p.add_argument('--features', type=_pair, help='2D 게이트 특성 쌍 i,j (manual)')
    p.add_argument('--selection', choices=['tree_importance', 'linear_importance', 'pca'])
    p.add_argument('--model-selection', dest='model_selection', choices=['best_training_accuracy', 'last_iteration'])
    p.add_argument('--estimate-experts', dest='estimate_experts', type=int, metavar='E_MAX',
                   help='GMM BIC로 e를 추정 (1..E_MAX)')

    p = sub.add_parser('predict', help='예측 CSV 출력')
    _add_common(p)
    p.add_argument('--model', required=True)
    p.add_argument('--dataset', required=True)
    p.add_argument('--schema', required=True)
    p.add_argument('--out', required=True, help='예측 CSV 경로')
    p.add_argument('--explain', action='store_true', help='decision_path 컬럼 추가')

    p = sub.add_parser('eval', help='정확도 출력')
    _add_common(p)
    p.add_argument('--model', required=True)
    p.add_argument('--dataset', required=True)
    p.add_argument('--schema', required=True)

    p = sub.add_parser('bench', help='탐색 + 반복 평가 리포트')
    _add_common(p)
    _add_model_hparams(p)
    p.add_argument('--dataset', action='append', required=True, help='여러 번 지정 가능')
    p.add_argument('--schema', action='append', required=True, help='--dataset과 같은 순서')
    p.add_argument('--out', required=True, help='리포트 CSV 경로 (Markdown은 같은 이름 .md)')
    p.add_argument('--trials', type=int)
    p.add_argument('--top-k', dest='top_k', type=int)
    p.add_argument('--reps', type=int)
    p.add_argument('--test-fraction', dest='test_fraction', type=float)

    p = sub.add_parser('plot', help='게이팅 / 트리 SVG')
    _add_common(p)
    p.add_argument('--model', required=True)
    p.add_argument('--dataset', help='게이팅 플롯에 겹쳐 그릴 데이터 (--trees-only가 아니면 필수)')
    p.add_argument('--schema')
    p.add_argument('--out-dir', dest='out_dir', default='.')
    p.add_argument('--resolution', type=int, default=300)
    p.add_argument('--rules', action='store_true', help='트리별 if/else 규칙 .txt도 저장')
    p.add_argument('--trees-only', dest='trees_only', action='store_true')
    return parser


def resolve_config(args: argparse.Namespace) -> Dict[str, Any]:
    overrides = {
        key: getattr(args, key)
        for key in (
            'experts', 'depth', 'gate', 'gamma', 'iterations', 'seed', 'selection', 'features',
            'model_selection', 'tol', 'threads', 'trials', 'top_k', 'reps', 'test_fraction', 'log_file',
        )
        if getattr(args, key, None) is not None
    }
    return ConfigValidator.load_config(overrides, args.config)


# ============================================================================
# 서브커맨드
# ============================================================================

def cmd_train(args: argparse.Namespace, cfg: Dict[str, Any]) -> int:
    dataset = load_dataset(args.dataset, args.schema)
    experts = cfg['experts']
    if args.estimate_experts is not None:
        experts = estimate_expert_count(dataset.X, args.estimate_experts, cfg['seed'])
        logger.info(f"📊 추정된 전문가 수 e={experts}")

    config = TrainConfig(
        e=experts,
        d=cfg['depth'],
        gate=cfg['gate'],
        gamma=cfg['gamma'],
        iterations=cfg['iterations'],
        seed=cfg['seed'],
        model_selection=cfg['model_selection'],
        selection=cfg['selection'],
        features=cfg['features'],
        tol=cfg['tol'],
        threads=cfg['threads'],
    )
    model, trace = train(dataset, config)

    out = Path(args.out)
    save_model(model, out)
    trace_path = Path(args.trace) if args.trace else out.with_suffix('.trace.csv')
    write_frame(trace.to_frame(), trace_path, float_format='%.10g')
    print(f"✅ 학습 완료: 학습 정확도 {model.train_meta['training_accuracy']:.4f} → {out}")
    return 0


def _encode_for_model(model: MoDTModel, dataset_path: str, schema_path: str, with_target: bool):
    raw = load_csv(dataset_path, load_schema(schema_path), require_target=with_target)
    encoding = model.encoding
    if encoding is None:
        logger.warning("⚠️ 모델 파일에 인코딩 정보가 없습니다. 입력 스키마로 다시 만듭니다.")
        encoding = build_encoding(raw)
        if encoding.width != len(model.feature_names):
            raise WidthMismatch(len(model.feature_names), encoding.width)
    if with_target:
        return raw, one_hot_encode(raw, encoding=encoding, class_names=model.class_names)
    return raw, encode_features(raw, encoding)


def cmd_predict(args: argparse.Namespace, cfg: Dict[str, Any]) -> int:
    model = load_model(args.model)
    _, X = _encode_for_model(model, args.dataset, args.schema, with_target=False)
    classes, experts = predict_with_experts(model, X)

    frame = pd.DataFrame({
        'row': range(len(classes)),
        'predicted_class': [model.class_names[c] for c in classes],
        'expert': experts,
    })
    if args.explain:
        frame['decision_path'] = [' AND '.join(explain(model, x)['path']) for x in X]
    write_frame(frame, Path(args.out))
    print(f"✅ 예측 {len(frame)}건 → {args.out}")
    return 0


def cmd_eval(args: argparse.Namespace, cfg: Dict[str, Any]) -> int:
    model = load_model(args.model)
    _, dataset = _encode_for_model(model, args.dataset, args.schema, with_target=True)
    accuracy = evaluate(model, dataset)
    complexity = model_complexity(model, dataset.X)
    print(f"accuracy: {accuracy:.4f}")
    print(
        f"nodes: {complexity['total_nodes']} (per expert {complexity['expert_nodes']}), "
        f"active experts: {complexity['active_experts']}/{model.e}"
    )
    return 0


def cmd_bench(args: argparse.Namespace, cfg: Dict[str, Any]) -> int:
    if len(args.dataset) != len(args.schema):
        raise UsageError("--dataset와 --schema의 개수가 같아야 합니다")

    protocol = BenchmarkProtocol(
        test_fraction=cfg['test_fraction'],
        n_trials=cfg['trials'],
        k_best=cfg['top_k'],
        reps=cfg['reps'],
        seed=cfg['seed'],
        e=cfg['experts'],
        d=cfg['depth'],
        threads=cfg['threads'],
    )
    frames = []
    for csv_path, schema_path in zip(args.dataset, args.schema):
        dataset = load_dataset(csv_path, schema_path)
        frames.append(benchmark(dataset, protocol, dataset_name=Path(csv_path).stem))
    report = pd.concat(frames, ignore_index=True)

    out = Path(args.out)
    write_frame(report, out, float_format='%.6g')
    markdown = report_markdown(report)
    write_text(out.with_suffix('.md'), markdown)
    print(markdown, end='')
    return 0


def cmd_plot(args: argparse.Namespace, cfg: Dict[str, Any]) -> int:
    model = load_model(args.model)
    out_dir = Path(args.out_dir)
    stem = Path(args.model).stem
    written: List[Path] = []

    gate_svg = None
    if not args.trees_only:
        # 아무것도 쓰기 전에 게이트 모드 확인
        plot_features(model)
        if not (args.dataset and args.schema):
            raise UsageError("게이팅 플롯에는 --dataset와 --schema가 필요합니다 (또는 --trees-only)")
        _, dataset = _encode_for_model(model, args.dataset, args.schema, with_target=True)
        gate_svg = render_gating_plot(GatePlotSpec(model=model, dataset=dataset, resolution=args.resolution))

    out_dir.mkdir(parents=True, exist_ok=True)
    if gate_svg is not None:
        path = out_dir / f"{stem}_gate.svg"
        write_text(path, gate_svg)
        written.append(path)

    for j, tree in enumerate(model.trees):
        spec = TreePlotSpec(tree=tree, feature_names=model.feature_names,
                            class_names=model.class_names, title=f"expert {j}")
        path = out_dir / f"{stem}_tree{j}.svg"
        write_text(path, render_tree(spec))
        written.append(path)
        if args.rules:
            path = out_dir / f"{stem}_tree{j}.txt"
            write_text(path, export_text(tree, model.feature_names, model.class_names))
            written.append(path)

    print(f"✅ 파일 {len(written)}개 저장: {', '.join(p.name for p in written)}")
    return 0


COMMANDS = {
    'train': cmd_train,
    'predict': cmd_predict,
    'eval': cmd_eval,
    'bench': cmd_bench,
    'plot': cmd_plot,
}


# ============================================================================
# MAIN
# ============================================================================

def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        cfg = resolve_config(args)
        level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
        setup_logger(level, cfg['log_file'])
        return COMMANDS[args.command](args, cfg)

    except ModtError as e:
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"❌ IoError: {e}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
