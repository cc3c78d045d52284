"""Best-effort masked-LM backend behind the same wire contract.

Loads a Hugging Face masked language model and reports its per-position
token distributions for masked slots. This generic fill-mask interface stands
in for a full diffusion sampler deployment: a diffusion-style client drives
the schedule itself and only needs conditional distributions per query, so
any encoder that scores masked positions fits the contract. Numeric modes are
pinned when `deterministic` is set, since embed/extract pairs require the
endpoint to be a pure function of the request.

Requires the `real` extra (torch + transformers); nothing here is needed for
stub-mode operation or the conformance tests.
"""

from __future__ import annotations

from typing import List, Tuple


class MaskedLmBackend:
    def __init__(self, model_name: str, device: str = "cpu", deterministic: bool = True):
        try:
            import torch
            from transformers import AutoModelForMaskedLM, AutoTokenizer
        except ImportError as exc:  # pragma: no cover - environment dependent
            raise RuntimeError(
                "real-model mode needs the 'real' extra (torch, transformers)"
            ) from exc

        self.torch = torch
        if deterministic:
            torch.manual_seed(0)
            torch.use_deterministic_algorithms(True, warn_only=True)
        self.tokenizer = AutoTokenizer.from_pretrained(model_name)
        self.model = AutoModelForMaskedLM.from_pretrained(model_name).to(device).eval()
        self.device = device
        if self.tokenizer.mask_token_id is None:
            raise RuntimeError(f"{model_name} has no mask token")
        self.mask_id = self.tokenizer.mask_token_id

    def distributions(
        self, sequence: List[int], positions: List[int]
    ) -> List[List[Tuple[int, float]]]:
        torch = self.torch
        ids = [self.mask_id if t == -1 else t for t in sequence]
        with torch.no_grad():
            logits = self.model(
                input_ids=torch.tensor([ids], device=self.device)
            ).logits[0]
            probs = torch.softmax(logits.double(), dim=-1)
        out = []
        for pos in positions:
            row = probs[pos]
            order = torch.argsort(row, descending=True, stable=True)
            out.append([(int(t), float(row[t])) for t in order])
        return out
