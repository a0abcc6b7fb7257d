from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

EXAMPLES_SLOT = "{examples}"


@dataclass(frozen=True)
class PromptTemplates:
    description: str
    generation: str

    def __post_init__(self):
        if not self.description.strip() or not self.generation.strip():
            raise ValueError("prompt templates must be non-empty")
        if self.generation.count(EXAMPLES_SLOT) != 1:
            raise ValueError(f"generation template needs exactly one {EXAMPLES_SLOT} slot")

    def generation_prompt(self, examples: list[str]) -> str:
        return self.generation.replace(EXAMPLES_SLOT, "\n".join(examples))


def _bundled(name: str) -> str:
    return resources.files("disfl").joinpath("data", "prompts", name).read_text(encoding="utf-8")


def load_templates(description_path=None, generation_path=None) -> PromptTemplates:
    """Bundled prompts, each overridable by a text file path."""
    desc = (Path(description_path).read_text(encoding="utf-8") if description_path
            else _bundled("description.txt"))
    gen = (Path(generation_path).read_text(encoding="utf-8") if generation_path
           else _bundled("generation.txt"))
    return PromptTemplates(desc.strip("\n"), gen.strip("\n"))
