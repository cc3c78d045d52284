"""Command-line surface: embed, extract, attack, eval, cover.

All commands are deterministic given their flags; seeds are always explicit.
Exit status 0 means success, 2 means the message was recovered only partially,
and 1 means a usage or I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from typing import Optional

from .attacks import TamperProfile, mixed_attack
from .bridge import BridgeModel, BridgeSession
from .engine import DenoiseSchedule, GenerationConfig, embed_message, generate_cover
from .extraction import extract_message
from .metrics import run_campaign
from .prng import SteganoKey
from .sampling import Framing, MessageBitstream, SamplingConfig, bits_to_bytes
from .synthetic import SyntheticModel, SyntheticModelSpec

__all__ = ["main"]

_DEFAULT_MODEL_SEED = "00" * 32


def _parse_args(argv):
    parser = argparse.ArgumentParser(
        prog="stead",
        description="Embed and extract secret bitstreams in diffusion-sampled token sequences.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, key_required: bool):
        p.add_argument("--key", help="64 hex chars; defaults to env STEAD_KEY", default=None)
        p.add_argument("--model", default="synthetic", help="synthetic | bridge:stdio:CMD | bridge:http:URL")
        p.add_argument("--model-seed", default=_DEFAULT_MODEL_SEED, help="synthetic model seed, 64 hex chars")
        p.add_argument("--vocab", type=int, default=256)
        p.add_argument("--concentration", type=float, default=4.0)
        p.add_argument("--length", type=int, default=256)
        p.add_argument("--steps", type=int, default=64)
        p.add_argument("--temperature", type=float, default=1.0)
        p.add_argument("--top-p", type=float, default=1.0)
        p.add_argument("--top-k", type=int, default=0)
        p.add_argument("--framing", choices=["raw", "length-prefixed-32"], default="length-prefixed-32")
        p.add_argument("--force", action="store_true", help="proceed past a config fingerprint mismatch")
        p.set_defaults(key_required=key_required)

    p = sub.add_parser("embed", help="embed a message file into a stego token sequence")
    add_common(p, key_required=True)
    p.add_argument("--message", required=True, help="path of the secret payload (raw bytes)")
    p.add_argument("--out", required=True, help="stego JSON output path")

    p = sub.add_parser("extract", help="recover the message from a (possibly tampered) stego file")
    add_common(p, key_required=True)
    p.add_argument("--in", dest="infile", required=True, help="stego JSON input path")
    p.add_argument("--out", required=True, help="extraction report JSON output path")
    p.add_argument("--message", required=True, help="recovered payload output path")

    p = sub.add_parser("cover", help="generate a cover sequence (no message)")
    add_common(p, key_required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("attack", help="apply bounded tampering to a stego file")
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--beta-count", type=int, default=0)
    p.add_argument("--gamma-count", type=int, default=0)
    p.add_argument("--attack-seed", type=int, default=0)
    p.add_argument("--vocab", type=int, default=256)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="run an attack-grid campaign from a JSON config")
    p.add_argument("--in", dest="infile", required=True, help="campaign config JSON")
    p.add_argument("--out", required=True, help="results JSON path (CSV written alongside)")
    p.add_argument("--trials", type=int, default=None, help="override config trial count")
    p.add_argument("--master-seed", type=int, default=None, help="override config master seed")

    return parser.parse_args(argv)


def _load_key(args) -> SteganoKey:
    raw = args.key or os.environ.get("STEAD_KEY")
    if not raw:
        raise SystemExit("error: --key or STEAD_KEY required")
    try:
        return SteganoKey.from_hex(raw)
    except ValueError as exc:
        raise SystemExit(f"error: bad key: {exc}")


def _sampling(args) -> SamplingConfig:
    return SamplingConfig(temperature=args.temperature, top_p=args.top_p, top_k=args.top_k)


def _gen_config(args) -> GenerationConfig:
    return GenerationConfig(
        length=args.length,
        schedule=DenoiseSchedule(args.steps),
        sampling=_sampling(args),
    )


def _build_model(args):
    selector = args.model
    if selector == "synthetic":
        spec = SyntheticModelSpec.from_hex(args.model_seed, args.vocab, args.concentration)
        return SyntheticModel(spec), None
    if selector.startswith("bridge:stdio:"):
        session = BridgeSession.stdio(selector[len("bridge:stdio:") :])
        return BridgeModel(session, _sampling(args)), session
    if selector.startswith("bridge:http:"):
        session = BridgeSession.http(selector[len("bridge:http:") :])
        return BridgeModel(session, _sampling(args)), session
    raise SystemExit(f"error: unknown model selector {selector!r}")


def _fingerprint(args) -> str:
    blob = json.dumps(
        {
            "length": args.length,
            "steps": args.steps,
            "temperature": args.temperature,
            "top_p": args.top_p,
            "top_k": args.top_k,
            "model": args.model,
            "model_seed": args.model_seed,
            "vocab": args.vocab,
            "concentration": args.concentration,
            "framing": args.framing,
        },
        sort_keys=True,
    )
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _check_fingerprint(args, stego: dict) -> None:
    recorded = stego.get("config_fingerprint")
    if recorded is not None and recorded != _fingerprint(args):
        print(
            "warning: stego file was produced under a different configuration",
            file=sys.stderr,
        )
        if not args.force:
            raise SystemExit("error: refusing to extract (use --force to override)")


def _write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


def _cmd_embed(args) -> int:
    key = _load_key(args)
    model, session = _build_model(args)
    try:
        with open(args.message, "rb") as fh:
            payload = fh.read()
        framing = Framing(args.framing)
        message = MessageBitstream.from_bytes(payload, framing)
        result = embed_message(model, key, _gen_config(args), message)
        _write_json(
            args.out,
            {
                "tokens": result.stegotext,
                "length": len(result.stegotext),
                "config_fingerprint": _fingerprint(args),
                "embedded_bits": result.embedded_bit_count,
            },
        )
        total = len(message.bits)
        if result.embedded_bit_count < total:
            print(
                f"warning: capacity exhausted, embedded {result.embedded_bit_count}"
                f" of {total} bits",
                file=sys.stderr,
            )
            return 2
        return 0
    finally:
        if session is not None:
            session.close()


def _cmd_cover(args) -> int:
    key = _load_key(args)
    model, session = _build_model(args)
    try:
        tokens = generate_cover(model, key, _gen_config(args))
        _write_json(
            args.out,
            {
                "tokens": tokens,
                "length": len(tokens),
                "config_fingerprint": _fingerprint(args),
            },
        )
        return 0
    finally:
        if session is not None:
            session.close()


def _cmd_extract(args) -> int:
    key = _load_key(args)
    with open(args.infile) as fh:
        stego = json.load(fh)
    _check_fingerprint(args, stego)
    model, session = _build_model(args)
    try:
        framing = Framing(args.framing)
        report = extract_message(model, key, _gen_config(args), stego["tokens"], framing)
        recovered = bits_to_bytes(report.message)
        with open(args.message, "wb") as fh:
            fh.write(recovered)
        declared = report.declared_payload_bits
        partial = (
            declared is None
            or len(report.message) < declared
            or any(step.lost for step in report.per_step)
        )
        _write_json(
            args.out,
            {
                "message_hex": recovered.hex(),
                "message_bits": len(report.message),
                "declared_payload_bits": declared,
                "loss_onset": report.loss_onset,
                "partial": partial,
                "per_step": [
                    {
                        "step": d.step_index,
                        "capacity": d.capacity,
                        "carried_message": d.carried_message,
                        "tampered_positions": d.tampered_positions,
                        "realigned": {str(k): v for k, v in d.realigned.items()},
                        "lost": d.lost,
                    }
                    for d in report.per_step
                ],
            },
        )
        return 2 if partial and framing is Framing.LengthPrefixed32 else 0
    finally:
        if session is not None:
            session.close()


def _cmd_attack(args) -> int:
    with open(args.infile) as fh:
        stego = json.load(fh)
    profile = TamperProfile(
        alpha=args.alpha,
        beta_count=args.beta_count,
        gamma_count=args.gamma_count,
        attack_seed=args.attack_seed,
    )
    tampered = mixed_attack(stego["tokens"], profile, args.vocab)
    out = dict(stego)
    out["tokens"] = tampered
    out["length"] = len(tampered)
    _write_json(args.out, out)
    return 0


def _cmd_eval(args) -> int:
    with open(args.infile) as fh:
        cfg = json.load(fh)
    grid = [
        TamperProfile(
            alpha=cell.get("alpha", 0.0),
            beta_count=cell.get("beta_count", 0),
            gamma_count=cell.get("gamma_count", 0),
        )
        for cell in cfg["grid"]
    ]
    model_cfg = cfg.get("model", {})
    spec = SyntheticModelSpec.from_hex(
        model_cfg.get("model_seed", _DEFAULT_MODEL_SEED),
        model_cfg.get("vocab", 256),
        model_cfg.get("concentration", 4.0),
    )
    sampling_cfg = cfg.get("sampling", {})
    config = GenerationConfig(
        length=cfg.get("length", 256),
        schedule=DenoiseSchedule(cfg.get("steps", 64)),
        sampling=SamplingConfig(
            temperature=sampling_cfg.get("temperature", 1.0),
            top_p=sampling_cfg.get("top_p", 1.0),
            top_k=sampling_cfg.get("top_k", 0),
        ),
    )
    trials = args.trials if args.trials is not None else cfg.get("trials", 10)
    master_seed = (
        args.master_seed if args.master_seed is not None else cfg.get("master_seed", 0)
    )
    result = run_campaign(
        grid,
        trials,
        spec,
        config,
        message_bits=cfg.get("message_bits", 128),
        master_seed=master_seed,
    )
    _write_json(args.out, result.as_dict())
    csv_path = os.path.splitext(args.out)[0] + ".csv"
    with open(csv_path, "w") as fh:
        fh.write("\n".join(result.csv_rows()) + "\n")
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    try:
        args = _parse_args(sys.argv[1:] if argv is None else argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors; 2 means partial here
        return 0 if exc.code == 0 else 1
    handlers = {
        "embed": _cmd_embed,
        "extract": _cmd_extract,
        "cover": _cmd_cover,
        "attack": _cmd_attack,
        "eval": _cmd_eval,
    }
    try:
        return handlers[args.command](args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
