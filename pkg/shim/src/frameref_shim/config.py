from dataclasses import dataclass

DEFAULT_TEMPLATE = (
    "Decide whether the following claim is factually supported or refuted. "
    "Claim: {claim} Verdict:"
)


@dataclass
class ShimConfig:
    model: str = "toy://0"
    host: str = "127.0.0.1"
    port: int = 8930
    template: str = DEFAULT_TEMPLATE
    max_batch: int = 4

    def __post_init__(self) -> None:
        if self.template.count("{claim}") != 1:
            raise ValueError("template must contain the {claim} placeholder exactly once")
        if self.max_batch < 1:
            raise ValueError(f"max_batch must be >= 1, got {self.max_batch}")

    def render(self, claim_text: str) -> str:
        return self.template.replace("{claim}", claim_text)
