"""Model wrapper and FastAPI application.

Protocol (shared with the sampling toolkit's remote client):
  GET  /v1/info        -> {"model", "vocab_size", "mask_id", "max_len"}
  POST /v1/conditional    {"tokens": [ids], "positions": [ints]}
                       -> {"log_probs": [[floats]]}

For each requested position the served sequence is wrapped as
[CLS] tokens [SEP] with the mask token substituted at that position, and
the log-softmax row over the vocabulary at that position is returned at
full float precision. Positions are processed one forward pass at a time
so batched requests are bit-identical to singles.
"""

from __future__ import annotations

import torch
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel
from transformers import AutoModelForMaskedLM, AutoTokenizer


class ConditionalRequest(BaseModel):
    tokens: list[int]
    positions: list[int]


class ServedModel:
    """Evaluation-mode masked LM plus the tokenizer metadata it serves."""

    def __init__(self, model_id: str, device: str = "cpu"):
        self.model_id = model_id
        self.device = torch.device(device)
        self.tokenizer = AutoTokenizer.from_pretrained(model_id)
        self.model = AutoModelForMaskedLM.from_pretrained(model_id)
        self.model.to(self.device)
        self.model.eval()
        if self.tokenizer.mask_token_id is None:
            raise ValueError(f"model {model_id} has no mask token")
        self.vocab_size = int(self.model.config.vocab_size)
        self.mask_id = int(self.tokenizer.mask_token_id)
        self.cls_id = self.tokenizer.cls_token_id
        self.sep_id = self.tokenizer.sep_token_id
        overhead = (self.cls_id is not None) + (self.sep_id is not None)
        self.max_len = int(self.model.config.max_position_embeddings) - overhead

    def info(self) -> dict:
        return {
            "model": self.model_id,
            "vocab_size": self.vocab_size,
            "mask_id": self.mask_id,
            "max_len": self.max_len,
        }

    def write_vocab(self, path: str) -> None:
        """Dump the vocabulary one token per line, line index == token id."""
        vocab = self.tokenizer.get_vocab()
        by_id = sorted(vocab.items(), key=lambda kv: kv[1])
        with open(path, "w", encoding="utf-8") as fh:
            for token, _ in by_id:
                fh.write(token + "\n")

    @torch.no_grad()
    def log_probs(self, tokens: list[int], position: int) -> list[float]:
        ids = list(tokens)
        ids[position] = self.mask_id
        offset = 0
        if self.cls_id is not None:
            ids = [self.cls_id] + ids
            offset = 1
        if self.sep_id is not None:
            ids = ids + [self.sep_id]
        batch = torch.tensor([ids], dtype=torch.long, device=self.device)
        logits = self.model(input_ids=batch).logits[0, position + offset]
        return torch.log_softmax(logits.double(), dim=-1).tolist()


def create_app(served: ServedModel) -> FastAPI:
    app = FastAPI(title="mlm-server")

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"error": f"malformed request: {exc.errors()}"})

    @app.get("/v1/info")
    def info():
        return served.info()

    @app.post("/v1/conditional")
    def conditional(request: ConditionalRequest):
        tokens = request.tokens
        if not tokens:
            return JSONResponse(status_code=400, content={"error": "empty token sequence"})
        if len(tokens) > served.max_len:
            return JSONResponse(
                status_code=400,
                content={"error": f"sequence length {len(tokens)} exceeds max_len "
                                  f"{served.max_len}"})
        bad_tokens = [t for t in tokens if not 0 <= t < served.vocab_size]
        if bad_tokens:
            return JSONResponse(status_code=400,
                                content={"error": f"token ids out of range: {bad_tokens[:5]}"})
        bad = [p for p in request.positions if not 0 <= p < len(tokens)]
        if bad:
            return JSONResponse(status_code=400,
                                content={"error": "positions out of range",
                                         "positions": bad})
        rows = [served.log_probs(tokens, p) for p in request.positions]
        return {"log_probs": rows}

    return app
