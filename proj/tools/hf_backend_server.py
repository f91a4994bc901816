#!/usr/bin/env python3
"""Serves one Hugging Face checkpoint over the atsc backend protocol.

    python3 tools/hf_backend_server.py --model bert-base-uncased --family masked_lm
    python3 tools/hf_backend_server.py --model roberta-large-mnli --family nli --port 8302

Then point the C++ side at it, e.g.
    ATSC_BACKEND_NLI_GENERIC=http://127.0.0.1:8302 atsc --config configs/paper.json run

Endpoints (JSON in, JSON out; errors are {"error": ...} with a non-2xx status):
    GET  /describe      family, provenance, domain, readout, max_length
    POST /reset         reload the served weights
    POST /tokenize      {text} -> {pieces: [{text, id, begin, end}]}, byte offsets
    POST /single_item   {word} -> {single, first}
    POST /mask_fill     {text, candidates} -> {entries, restricted}
    POST /next_token    {text, candidates} -> {entries, restricted}
    POST /nli_score     {premise, hypothesis} -> {entail, neutral, contradict}
    POST /pair_classify {text, aspect} -> {scores}
    POST /fit           {schedule, instances} -> {initial_loss, final_loss, ...}
"""

import argparse
import json
import logging
import random
import sys
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import torch
import torch.nn.functional as F
from transformers import (AutoModel, AutoModelForCausalLM, AutoModelForMaskedLM,
                          AutoModelForSequenceClassification, AutoTokenizer)

log = logging.getLogger("hf_backend")

MASK = "[MASK]"


class ProtocolError(Exception):
    pass


class PairHead(torch.nn.Module):
    """Three-way head over the encoder: raw first-token state (cls) or the
    pretrained pooler that feeds next-sentence prediction (nsp)."""

    def __init__(self, encoder, readout):
        super().__init__()
        self.encoder = encoder
        self.readout = readout
        hidden = encoder.config.hidden_size
        self.dropout = torch.nn.Dropout(encoder.config.hidden_dropout_prob)
        self.out = torch.nn.Linear(hidden, 3)

    def forward(self, **enc):
        h = self.encoder(**enc)
        if self.readout == "nsp":
            if getattr(h, "pooler_output", None) is None:
                raise ProtocolError("nsp readout needs a model with a pooler")
            x = h.pooler_output
        else:
            x = h.last_hidden_state[:, 0]
        return self.out(self.dropout(x))


class Model:
    def __init__(self, args):
        self.args = args
        self.device = torch.device(args.device)
        self.tok = AutoTokenizer.from_pretrained(args.model)
        if not self.tok.is_fast:
            raise SystemExit("a fast tokenizer is needed for character offsets")
        # Byte-level BPE vocabularies mark a leading space on word items.
        probe = self.tok.tokenize(" a")
        self.space_prefix = bool(probe) and probe[0] != "a"
        self.reset()

    def reset(self):
        a = self.args
        torch.manual_seed(a.init_seed)
        if a.family == "masked_lm":
            self.net = AutoModelForMaskedLM.from_pretrained(a.model)
        elif a.family == "causal_lm":
            self.net = AutoModelForCausalLM.from_pretrained(a.model)
        elif a.family == "nli":
            self.net = AutoModelForSequenceClassification.from_pretrained(a.model)
            self.nli_index = self._nli_labels()
        else:
            self.net = PairHead(AutoModel.from_pretrained(a.model), a.readout)
        self.net.to(self.device).eval()
        self.task_trained = False

    def _nli_labels(self):
        found = {}
        for i, name in self.net.config.id2label.items():
            n = name.lower()
            for key in ("entail", "neutral", "contradict"):
                if n.startswith(key[:6]):
                    found[key] = int(i)
        if len(found) != 3:
            raise SystemExit(f"cannot map NLI labels {self.net.config.id2label}")
        return found

    def max_length(self):
        m = self.tok.model_max_length
        return int(m) if m and m < 100000 else 512

    def describe(self):
        a = self.args
        d = {"family": a.family, "provenance": a.provenance, "max_length": self.max_length(),
             "task_trained": self.task_trained}
        if a.domain:
            d["domain"] = a.domain
        if a.family == "pair_classifier":
            d["readout"] = a.readout
        return d

    # -- tokens --------------------------------------------------------------

    def _text(self, text):
        return text.replace(MASK, self.tok.mask_token) if self.tok.mask_token else text

    def tokenize(self, text):
        enc = self.tok(text, add_special_tokens=False, return_offsets_mapping=True)
        # Character offsets -> byte offsets.
        prefix = [0]
        for ch in text:
            prefix.append(prefix[-1] + len(ch.encode("utf-8")))
        pieces = []
        for i, (b, e) in zip(enc["input_ids"], enc["offset_mapping"]):
            pieces.append({"text": self.tok.convert_ids_to_tokens(i), "id": i,
                           "begin": prefix[b], "end": prefix[e]})
        return pieces

    def _word_items(self, word):
        return self.tok.tokenize((" " + word) if self.space_prefix else word)

    def single_item(self, word):
        items = self._word_items(word)
        if not items:
            raise ProtocolError(f"'{word}' tokenizes to nothing")
        return {"single": len(items) == 1, "first": items[0]}

    def _candidate_ids(self, candidates):
        ids = []
        for c in candidates:
            i = self.tok.convert_tokens_to_ids(c)
            if i is None or i == self.tok.unk_token_id:
                raise ProtocolError(f"candidate '{c}' is not a vocabulary item")
            ids.append(i)
        return ids

    def _encode(self, *texts):
        return self.tok(*texts, return_tensors="pt", truncation=True,
                        max_length=self.max_length()).to(self.device)

    def _mask_logits(self, text):
        enc = self._encode(self._text(text))
        pos = (enc["input_ids"][0] == self.tok.mask_token_id).nonzero()
        if len(pos) != 1:
            raise ProtocolError("text needs exactly one mask after truncation")
        return self.net(**enc).logits[0, pos[0, 0]]

    def _next_logits(self, text):
        enc = self.tok(text, return_tensors="pt").to(self.device)
        ids = enc["input_ids"][:, -self.max_length():]
        return self.net(input_ids=ids).logits[0, -1]

    def _distribution(self, logits, candidates):
        probs = torch.softmax(logits.float(), -1)
        if candidates:
            ids = self._candidate_ids(candidates)
            return {"entries": {c: float(probs[i]) for c, i in zip(candidates, ids)},
                    "restricted": True}
        vocab = self.tok.convert_ids_to_tokens(list(range(probs.shape[0])))
        return {"entries": {t: float(p) for t, p in zip(vocab, probs.tolist()) if t is not None},
                "restricted": False}

    @torch.no_grad()
    def mask_fill(self, text, candidates):
        self._need("masked_lm")
        return self._distribution(self._mask_logits(text), candidates)

    @torch.no_grad()
    def next_token(self, text, candidates):
        self._need("causal_lm")
        return self._distribution(self._next_logits(text), candidates)

    def _nli_logits(self, premise, hypothesis):
        return self.net(**self._encode(premise, hypothesis)).logits[0]

    @torch.no_grad()
    def nli_score(self, premise, hypothesis):
        self._need("nli")
        z = self._nli_logits(premise, hypothesis)
        return {k: float(z[i]) for k, i in self.nli_index.items()}

    @torch.no_grad()
    def pair_classify(self, text, aspect):
        self._need("pair_classifier")
        return {"scores": self.net(**self._encode(text, aspect))[0].tolist()}

    def _need(self, family):
        if self.args.family != family:
            raise ProtocolError(f"this server is a {self.args.family} backend, not {family}")

    # -- training ------------------------------------------------------------

    def _loss(self, x):
        kind = x["kind"]
        if kind == "label_word":
            ids = self._candidate_ids(x["label_words"])
            logits = self._mask_logits(x["text"]) if x["mode"] == "cloze" else \
                self._next_logits(x["text"])
            return F.cross_entropy(logits[ids].unsqueeze(0), torch.tensor([x["target"]], device=self.device))
        if kind == "nli":
            i = self.nli_index
            pos = self._nli_logits(x["premise"], x["positive_hypothesis"])
            neg = self._nli_logits(x["premise"], x["negative_hypothesis"])
            z = torch.stack([pos[i["entail"]], neg[i["entail"]],
                             (pos[i["neutral"]] + neg[i["neutral"]]) / 2])
            return F.cross_entropy(z.unsqueeze(0), torch.tensor([x["target"]], device=self.device))
        if kind == "pair":
            z = self.net(**self._encode(x["text"], x["aspect"]))
            return F.cross_entropy(z, torch.tensor([x["target"]], device=self.device))
        if kind in ("masked_lm", "causal_lm"):
            ids = torch.tensor([x["input_ids"]], device=self.device)
            tgt = torch.tensor([x["target_ids"]], device=self.device)
            if (tgt < 0).all():
                return None
            logits = self.net(input_ids=ids).logits[0]
            return F.cross_entropy(logits, tgt[0], ignore_index=-1)
        raise ProtocolError(f"unknown instance kind '{kind}'")

    def fit(self, schedule, instances):
        if not instances:
            raise ProtocolError("fit needs at least one instance")
        epochs = int(schedule.get("epochs", 20))
        batch = int(schedule.get("batch_size", 4))
        max_steps = schedule.get("max_steps")
        opt = torch.optim.AdamW(self.net.parameters(), lr=float(schedule["learning_rate"]),
                                weight_decay=float(schedule.get("weight_decay", 0.0)))
        seed = int(schedule.get("seed", 0))
        planned = epochs * -(-len(instances) // batch)
        if max_steps is not None:
            planned = min(planned, int(max_steps))
        decay = schedule.get("lr_decay", "constant") == "linear"
        sched = torch.optim.lr_scheduler.LambdaLR(
            opt, lambda step: 1.0 - step / planned if decay else 1.0)
        self.net.train()
        losses, steps = [], 0
        try:
            for epoch in range(epochs):
                order = list(range(len(instances)))
                random.Random(seed * 1000003 + epoch).shuffle(order)
                total, counted = 0.0, 0
                for start in range(0, len(order), batch):
                    terms = [self._loss(instances[k]) for k in order[start:start + batch]]
                    terms = [t for t in terms if t is not None]
                    if not terms:
                        continue
                    loss = torch.stack(terms).mean()
                    if not torch.isfinite(loss):
                        raise ProtocolError("non-finite training loss")
                    opt.zero_grad()
                    loss.backward()
                    opt.step()
                    sched.step()
                    steps += 1
                    total += loss.item() * len(terms)
                    counted += len(terms)
                    if max_steps is not None and steps >= int(max_steps):
                        break
                losses.append(total / counted if counted else 0.0)
                log.info("epoch %d loss %.5f", epoch + 1, losses[-1])
                if max_steps is not None and steps >= int(max_steps):
                    break
        finally:
            self.net.eval()
        if any(x["kind"] in ("label_word", "nli", "pair") for x in instances):
            self.task_trained = True
        return {"initial_loss": losses[0], "final_loss": losses[-1], "min_loss": min(losses),
                "epoch_losses": losses, "steps": steps}


def make_handler(model):
    lock = threading.Lock()
    routes = {
        "/reset": lambda b: (model.reset(), {})[1],
        "/tokenize": lambda b: {"pieces": model.tokenize(b["text"])},
        "/single_item": lambda b: model.single_item(b["word"]),
        "/mask_fill": lambda b: model.mask_fill(b["text"], b.get("candidates", [])),
        "/next_token": lambda b: model.next_token(b["text"], b.get("candidates", [])),
        "/nli_score": lambda b: model.nli_score(b["premise"], b["hypothesis"]),
        "/pair_classify": lambda b: model.pair_classify(b["text"], b["aspect"]),
        "/fit": lambda b: model.fit(b["schedule"], b["instances"]),
    }

    class Handler(BaseHTTPRequestHandler):
        def _reply(self, status, obj):
            data = json.dumps(obj).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def do_GET(self):
            if self.path != "/describe":
                return self._reply(404, {"error": f"no GET {self.path}"})
            self._reply(200, model.describe())

        def do_POST(self):
            route = routes.get(self.path)
            if route is None:
                return self._reply(404, {"error": f"no endpoint {self.path}"})
            try:
                body = json.loads(self.rfile.read(int(self.headers.get("Content-Length", 0))) or b"{}")
                with lock:
                    out = route(body)
                self._reply(200, out)
            except (ProtocolError, KeyError, ValueError, TypeError) as e:
                self._reply(400, {"error": f"{type(e).__name__}: {e}"})
            except Exception as e:  # keep serving
                log.exception("request failed")
                self._reply(500, {"error": f"{type(e).__name__}: {e}"})

        def log_message(self, fmt, *args):
            log.debug(fmt, *args)

    return Handler


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--model", required=True, help="hub id or local directory")
    p.add_argument("--family", required=True,
                   choices=["masked_lm", "causal_lm", "nli", "pair_classifier"])
    p.add_argument("--provenance", default="generic", choices=["generic", "domain_adapted"])
    p.add_argument("--domain", choices=["laptops", "restaurants"])
    p.add_argument("--readout", default="cls", choices=["cls", "nsp"])
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8300)
    p.add_argument("--device", default="cuda" if torch.cuda.is_available() else "cpu")
    p.add_argument("--init-seed", type=int, default=0, help="seed for freshly added heads")
    p.add_argument("--log-level", default="INFO")
    args = p.parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(asctime)s %(levelname)s %(message)s")
    if args.provenance == "domain_adapted" and not args.domain:
        p.error("--provenance domain_adapted needs --domain")

    model = Model(args)
    server = HTTPServer((args.host, args.port), make_handler(model))
    # The smoke test reads this line to learn the port.
    print(f"listening on http://{args.host}:{server.server_address[1]}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


if __name__ == "__main__":
    sys.exit(main())
