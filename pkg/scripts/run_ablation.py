#!/usr/bin/env python3
"""
Скрипт полного прогона абляций на синтетическом наборе
Запуск: python scripts/run_ablation.py [каталог_результатов]
"""
import sys
from pathlib import Path

# Добавляем корень проекта в path
sys.path.insert(0, str(Path(__file__).parent.parent))

from loguru import logger

from app.config import settings
from app.data import load_dataset, write_synthetic_dataset
from app.services import ablation_grid, direction_summary, run_ablation
from app.services.evaluation_service import ABLATION_PRESETS, EXPECTED_DIRECTIONS

SEEDS = (0, 1, 2, 3, 4)


def main(out_dir: Path) -> None:
    data_dir = out_dir / "synthetic"
    if not data_dir.exists():
        write_synthetic_dataset(data_dir, identities=60, cameras=2, views_per_camera=4, seed=settings.SEED)
    split = load_dataset(data_dir, settings.SPLIT_FRACTIONS, seed=settings.SEED)

    for preset in sorted(ABLATION_PRESETS):
        logger.info(f"🧪 Набор абляций {preset}")
        report = run_ablation(
            ablation_grid(preset),
            split,
            seeds=SEEDS,
            epochs=settings.EPOCHS,
            batch_size=24,
            lr=settings.LEARNING_RATE,
            weight_decay=settings.WEIGHT_DECAY,
            eval_batch=settings.EVAL_BATCH,
        )
        report.to_csv(out_dir / f"ablation_{preset}.csv", index=False)
        summary = direction_summary(report, EXPECTED_DIRECTIONS[preset])
        summary.to_csv(out_dir / f"directions_{preset}.csv", index=False)
        print(summary.to_string(index=False))

    print("\n✅ Абляции завершены!")


if __name__ == "__main__":
    target = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("results")
    target.mkdir(parents=True, exist_ok=True)
    main(target)
