"""Pydantic request/response models for the labeling session service."""

from pydantic import BaseModel, Field


class PartitionModel(BaseModel):
    kind: str = "predicted-class"
    num_bins: int = 10
    attribute_name: str | None = None


class PriorModel(BaseModel):
    kind: str = "uniform"
    strength: float | None = None


class StrategyModel(BaseModel):
    kind: str = "thompson"
    m: int = 1
    beta_resample: float = 0.5
    epsilon: float = 0.1
    ucb_quantile: float = 0.975
    direction: str | None = None


class SessionConfigModel(BaseModel):
    """Wire form of a session config; unset sections fall back to the
    server's defaults."""

    task: str | None = None
    partition: PartitionModel | None = None
    prior: PriorModel | None = None
    strategy: StrategyModel | None = None
    budget: int | None = None
    seed: int | None = None
    outcome_kind: str | None = None
    compare_pair: tuple[int, int] | None = None
    rope_epsilon: float | None = None
    n_samples: int | None = None
    cost_matrix: list[list[float]] | None = None

    def overrides(self) -> dict:
        return self.model_dump(exclude_none=True)


class CreateSessionRequest(BaseModel):
    config: SessionConfigModel = Field(default_factory=SessionConfigModel)


class CreateSessionResponse(BaseModel):
    session_id: str


class NextQueryResponse(BaseModel):
    instance_id: str
    group: int
    group_name: str
    predicted_class: int
    confidence: float
    step: int
    display_url: str | None = None


class LabelRequest(BaseModel):
    instance_id: str
    outcome: int


class LabelResponse(BaseModel):
    group: int
    mean: float
    trials: int
    step: int


class ErrorResponse(BaseModel):
    error: str
    message: str
