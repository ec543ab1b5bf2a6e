from .base import CampaignSpec, CaseJob, CaseResult, CaseSpec, ICaseRunner, run_case
from .campaign import CampaignSummary, run_campaign, sidecar_path
from .pool import PoolRunner
from .serial import SerialRunner

__all__ = [
    "CampaignSpec",
    "CampaignSummary",
    "CaseJob",
    "CaseResult",
    "CaseSpec",
    "ICaseRunner",
    "PoolRunner",
    "SerialRunner",
    "run_campaign",
    "run_case",
    "sidecar_path",
]
