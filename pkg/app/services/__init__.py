"""
Сервисы (бизнес-логика)
"""
from app.services.training_service import TrainingService, TrainingResult
from app.services.evaluation_service import (
    CmcCurve,
    EvaluationService,
    ablation_grid,
    cmc,
    direction_summary,
    run_ablation,
)
from app.services.checkpoint_service import CheckpointService, load_checkpoint, save_checkpoint
from app.services.gradcheck_service import GradcheckService

__all__ = [
    "TrainingService",
    "TrainingResult",
    "CmcCurve",
    "EvaluationService",
    "ablation_grid",
    "cmc",
    "direction_summary",
    "run_ablation",
    "CheckpointService",
    "load_checkpoint",
    "save_checkpoint",
    "GradcheckService"
]
