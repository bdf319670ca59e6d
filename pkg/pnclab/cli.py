#!/usr/bin/env python3

import os
import sys
import subprocess
import argparse
from dataclasses import replace

# -------------------------------
# 0. 설정
# -------------------------------

SCRIPT_PATH = os.path.realpath(__file__)
SCRIPT_DIR = os.path.dirname(SCRIPT_PATH)

BASE_DIR = os.getcwd()
REQUIREMENTS = os.path.join(os.path.dirname(SCRIPT_DIR), "requirements.txt")

# -------------------------------
# 1. 기본 설정
# -------------------------------
def setup_environment():
    # galois 없는 경우에만 설치 (pipx 환경에서는 이미 설치되어 있음)
    try:
        import galois  # noqa: F401
    except ImportError:
        print("📦 Installing dependencies...")
        subprocess.run([sys.executable, "-m", "pip", "install", "-r", REQUIREMENTS], check=True)

# -------------------------------
# 2. 명령어 파서
# -------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pnc-lab",
        description="📡 PNC lab - 물리 계층 네트워크 코딩 실험 (rate 곡선, Monte Carlo, CSV 검증)",
        epilog="""
    예시:
    pnc-lab run configs/twoway.cfg                 # 실험 실행 후 CSV + 리포트 생성
    pnc-lab run configs/twoway.cfg --seed 7        # seed 지정
    pnc-lab run configs/geteqm3.cfg --workers 4    # 병렬 실행 (결과는 동일)
    pnc-lab verify golden.csv fresh.csv            # 골든 CSV와 비교
    pnc-lab curves --start 0 --stop 30             # 양방향 릴레이 rate 표 출력
    """,
        formatter_class=argparse.RawTextHelpFormatter
    )

    subparsers = parser.add_subparsers(dest="command", required=True)

    # run
    run_parser = subparsers.add_parser("run", help="실험 설정 파일을 실행하고 CSV 저장")
    run_parser.add_argument("config", type=str, help="실험 설정 파일 (key = value)")
    run_parser.add_argument("--out", type=str, help="출력 CSV 경로 (설정 파일보다 우선)")
    run_parser.add_argument("--seed", type=int, help="seed (설정 파일보다 우선)")
    run_parser.add_argument("--workers", type=int, help="worker 프로세스 수")
    run_parser.add_argument("--verbose", action="store_true", help="SNR 지점마다 진행 상황 출력")

    # verify
    verify_parser = subparsers.add_parser("verify", help="골든 CSV와 새 CSV 비교")
    verify_parser.add_argument("golden", type=str, help="골든 CSV")
    verify_parser.add_argument("fresh", type=str, help="새로 생성한 CSV")
    verify_parser.add_argument("--tol", type=float, help="해석적 열 허용 오차 (기본: .pncrc 또는 1e-9)")

    # curves
    curves_parser = subparsers.add_parser("curves", help="양방향 릴레이 rate 곡선 표 출력 (파일 저장 없음)")
    curves_parser.add_argument("--start", type=float, default=-5.0, help="시작 SNR (dB)")
    curves_parser.add_argument("--stop", type=float, default=25.0, help="끝 SNR (dB)")
    curves_parser.add_argument("--step", type=float, default=5.0, help="SNR 간격 (dB)")

    return parser


def format_curve_table(points, strategies) -> str:
    """Rate table with one row per SNR and one column per strategy."""
    header = f"{'SNR(dB)':>8} " + " ".join(f"{s.label:>9}" for s in strategies)
    lines = [header, "-" * len(header)]
    grid = sorted({p.snr_db for p in points})
    by_key = {(p.label, p.snr_db): p.rate for p in points}
    for snr_db in grid:
        lines.append(f"{snr_db:>8g} " + " ".join(f"{by_key[(s.label, snr_db)]:>9.4f}" for s in strategies))
    lines.append("(bits per channel use per user, complex channel, sigma2 = 1)")
    return "\n".join(lines)

# -------------------------------
# 3. 명령어 라우팅
# -------------------------------
def main(argv=None):
    # 환경 설정
    setup_environment()

    from pnclab.core.config import ConfigError, LabConfig, load_experiment
    from pnclab.core.galois_core import FieldError
    from pnclab.core.lattice_cf import LatticeError
    from pnclab.core.modq_phy import ChannelError
    from pnclab.core.results import SchemaError
    from pnclab.core.wireless_twoway import StrategyId, twoway_curves
    from pnclab.core.xp_runner import run, verify

    args = build_parser().parse_args(argv)

    # 설정 로드
    lab = LabConfig(BASE_DIR)

    try:
        if args.command == "run":
            config = load_experiment(args.config, lab)
            overrides = {}
            if args.out:
                overrides["output"] = args.out
            if args.seed is not None:
                if args.seed < 0:
                    raise ConfigError("seed must be non-negative", key="seed")
                overrides["seed"] = args.seed
            if args.workers is not None:
                if args.workers < 1:
                    raise ConfigError("workers must be at least 1", key="workers")
                overrides["workers"] = args.workers
            if overrides:
                config = replace(config, **overrides)
            sys.exit(run(config, verbose=args.verbose))
        elif args.command == "verify":
            tolerance = args.tol if args.tol is not None else lab.verify_tolerance
            if not verify(args.golden, args.fresh, tolerance):
                sys.exit(1)
        elif args.command == "curves":
            if args.step <= 0 or args.stop < args.start:
                raise ConfigError("need step > 0 and stop >= start")
            count = int((args.stop - args.start) / args.step + 1e-9) + 1
            grid = [round(args.start + i * args.step, 10) for i in range(count)]
            strategies = list(StrategyId)
            print(format_curve_table(twoway_curves(grid, strategies), strategies))
    except (ConfigError, FieldError, ChannelError, LatticeError, SchemaError, OSError) as e:
        print(f"❌ {e}", file=sys.stderr)
        sys.exit(1)

# -------------------------------
# 4. 진입점
# -------------------------------
if __name__ == "__main__":
    main()
