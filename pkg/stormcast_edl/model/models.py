"""Data models for the nowcasting network."""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from stormcast_edl.numerics import Tensor

Head = Literal["deterministic", "evidential"]

HEAD_CHANNELS = {"deterministic": 1, "evidential": 4}


class ModelConfig(BaseModel):
    """Architecture of the spatiotemporal encoder-decoder."""

    d_model: int = Field(32, gt=0, description="Embedding width")
    n_blocks: int = Field(2, gt=0, description="Number of cuboid attention blocks")
    d_k: int = Field(16, gt=0, description="Attention key width")
    ffn_width: int = Field(64, gt=0, description="Hidden width of the feed-forward sublayer")
    in_steps: int = Field(13, gt=0, description="Observed frames per sample")
    out_steps: int = Field(12, gt=0, description="Forecast frames per sample")
    frame_h: int = Field(32, gt=0)
    frame_w: int = Field(32, gt=0)
    head: Head = "deterministic"
    dropout_rate: float = Field(0.0, ge=0.0, lt=1.0)
    axis_window: Optional[int] = Field(
        None,
        gt=0,
        description="Block-local window along the height and width axes; full axis when unset",
    )
    layer_norm_eps: float = Field(1e-10, gt=0.0)

    @field_validator("d_model")
    @classmethod
    def validate_d_model(cls, value: int) -> int:
        if value % 2:
            raise ValueError(f"d_model must be even for sin/cos positional pairs, got {value}")
        return value

    @property
    def out_channels(self) -> int:
        return HEAD_CHANNELS[self.head]

    def backbone_signature(self) -> dict:
        """Fields that fix every parameter shape except the decoder's output width."""
        return self.model_dump(exclude={"head", "dropout_rate"})

    def with_head(self, head: Head) -> "ModelConfig":
        return self.model_copy(update={"head": head})


class BlockState(BaseModel):
    """Intermediate activations of one cuboid block, each ``[B, T, H, W, d_model]``."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    block_input: Tensor = Field(..., description="Block input (the embedded sequence for block 0)")
    attention: Tensor = Field(
        ..., description="Averaged tri-axis attention after output projection"
    )
    residual: Tensor = Field(..., description="LayerNorm(input + attention)")
    output: Tensor = Field(..., description="LayerNorm(residual + FFN(residual))")
