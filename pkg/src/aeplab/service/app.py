"""FastAPI service wrapping the laboratory.

Experiment endpoints return the deterministic CSV as text/csv so clients can
persist it verbatim; configuration problems map to 400, resource-cap refusals
to 413 (the CLI translates those to exit codes 2 and 3).
"""

from __future__ import annotations

import base64

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from .. import __version__
from ..channel import Sequence, single_letter_stats
from ..codebook import deserialize, generate_codebook, is_typical_codebook, input_entropy_rate, serialize
from ..errors import CapExceeded, ConfigError, EmptyTypicalSet
from ..experiments import (
    ExperimentConfig,
    cond_entropy_rate,
    fano_report,
    input_entropy_trend,
    joint_typicality_rate,
    sweep_report,
    theorem1_report,
    typical_codebook_rate,
)
from ..relay import compare_scenarios, decode_stream, encode_stream, TypicalSetCoder
from ..report import ExperimentReport, render_csv, version_string
from ..specfile import ChannelSpec, parse_channel_spec
from .. import typicality as typ
from . import models


def _spec(text: str) -> ChannelSpec:
    return parse_channel_spec(text)


def _epsilon(req_eps: float | None, spec: ChannelSpec) -> float:
    eps = req_eps if req_eps is not None else spec.epsilon
    if eps is None:
        raise ConfigError("epsilon not given and no default in the channel spec")
    if eps <= 0:
        raise ConfigError("epsilon must be positive")
    return eps


def _rates(req_rates: list[float], spec: ChannelSpec) -> tuple[float, ...]:
    if req_rates:
        return tuple(req_rates)
    if spec.rate is not None:
        return (spec.rate,)
    raise ConfigError("rate not given and no default in the channel spec")


def _config(req: models.ExperimentRequest) -> ExperimentConfig:
    spec = _spec(req.spec_text)
    return ExperimentConfig(
        channel=spec.dmc,
        p0=spec.p0,
        epsilon=_epsilon(req.epsilon, spec),
        n_grid=tuple(req.n_grid),
        rates=_rates(req.rates, spec),
        trials=req.trials,
        codebooks=req.codebooks,
        seed=req.seed,
        workers=req.workers,
    )


def _csv(report) -> Response:
    return Response(content=render_csv(report), media_type="text/csv")


def create_app() -> FastAPI:
    app = FastAPI(title="aeplab", version=__version__)

    @app.exception_handler(ConfigError)
    async def _config_error(_: Request, exc: ConfigError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(EmptyTypicalSet)
    async def _empty_error(_: Request, exc: EmptyTypicalSet):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(CapExceeded)
    async def _cap_error(_: Request, exc: CapExceeded):
        return JSONResponse(status_code=413, content={"detail": str(exc)})

    @app.get("/health", response_model=models.HealthResponse)
    def health():
        return models.HealthResponse(status="ok", version=version_string())

    @app.post("/channel/info", response_model=models.InfoResponse)
    def channel_info(req: models.InfoRequest):
        spec = _spec(req.spec_text)
        st = single_letter_stats(spec.dmc, spec.p0)
        cap_in = {
            sym: float(p)
            for sym, p in zip(spec.dmc.input.symbols, st.capacity_input.probs)
        }
        return models.InfoResponse(
            h0_x=st.h0_x,
            h0_y=st.h0_y,
            h0_xy=st.h0_xy,
            h0_y_given_x=st.h0_y_given_x,
            i0_xy=st.i0_xy,
            capacity=st.capacity,
            capacity_input=cap_in,
        )

    @app.post("/typical-set")
    def typical_set(req: models.TypicalSetRequest):
        spec = _spec(req.spec_text)
        eps = _epsilon(req.epsilon, spec)
        pmf = spec.p0 if req.side == "input" else spec.dmc.output_pmf(spec.p0)
        alphabet = pmf.alphabet
        classes, log2_size = typ.typical_type_classes(pmf, typ.TypicalityParams(eps, req.n))
        report = ExperimentReport(
            name="typical_set",
            columns=["class_idx"]
            + [f"count_{sym}" for sym in alphabet.symbols]
            + ["log2_class_size"],
            metadata={
                "side": req.side,
                "n": str(req.n),
                "epsilon": f"{eps:.12g}",
                "log2_set_size": f"{log2_size:.12g}" if classes else "-inf",
                "empty": "0" if classes else "1",
                "version": version_string(),
            },
        )
        for i, cls in enumerate(classes):
            report.add(i, *[int(c) for c in cls.counts], cls.multiplicity)
        return _csv(report)

    @app.post("/codebook/generate")
    def codebook_generate(req: models.CodebookGenerateRequest):
        spec = _spec(req.spec_text)
        eps = _epsilon(req.epsilon, spec)
        rate = req.rate if req.rate is not None else spec.rate
        if rate is None:
            raise ConfigError("rate not given and no default in the channel spec")
        cb = generate_codebook(spec.p0, req.n, rate, eps, req.seed)
        return Response(content=serialize(cb), media_type="application/octet-stream")

    @app.post("/codebook/check")
    def codebook_check(req: models.CodebookCheckRequest):
        spec = _spec(req.spec_text)
        try:
            raw = base64.b64decode(req.codebook_b64, validate=True)
        except Exception:
            raise ConfigError("codebook_b64 is not valid base64") from None
        cb = deserialize(raw, spec.dmc.input)
        eps = req.epsilon if req.epsilon is not None else cb.epsilon
        stats = is_typical_codebook(cb, spec.dmc, spec.p0, eps)
        report = ExperimentReport(
            name="codebook_check",
            columns=[
                "n",
                "num_words",
                "realized_rate",
                "epsilon",
                "all_words_typical",
                "sup_deviation",
                "threshold",
                "is_typical",
                "is_regular",
                "duplicate_count",
                "input_entropy_rate",
            ],
            metadata={"seed": str(cb.seed), "version": version_string()},
        )
        report.add(
            cb.n,
            cb.num_words,
            cb.realized_rate,
            eps,
            stats.all_words_typical,
            stats.sup_deviation,
            stats.threshold,
            stats.is_typical,
            stats.is_regular,
            stats.duplicate_count,
            input_entropy_rate(cb),
        )
        return _csv(report)

    @app.post("/experiments/theorem1")
    def exp_theorem1(req: models.ExperimentRequest):
        return _csv(theorem1_report(_config(req)))

    @app.post("/experiments/theorem2")
    def exp_theorem2(req: models.ExperimentRequest):
        return _csv(typical_codebook_rate(_config(req)))

    @app.post("/experiments/theorem3")
    def exp_theorem3(req: models.ExperimentRequest):
        return _csv(cond_entropy_rate(_config(req)))

    @app.post("/experiments/lemma4")
    def exp_lemma4(req: models.ExperimentRequest):
        spec = _spec(req.spec_text)
        cfg = ExperimentConfig(
            channel=spec.dmc,
            p0=spec.p0,
            epsilon=_epsilon(req.epsilon, spec),
            n_grid=tuple(req.n_grid),
            rates=tuple(req.rates) or (0.0,),
            trials=req.trials,
            codebooks=req.codebooks,
            seed=req.seed,
            workers=req.workers,
        )
        return _csv(joint_typicality_rate(cfg, force_mc=req.mc))

    @app.post("/experiments/lemma6")
    def exp_lemma6(req: models.ExperimentRequest):
        return _csv(input_entropy_trend(_config(req)))

    @app.post("/experiments/fano")
    def exp_fano(req: models.ExperimentRequest):
        return _csv(fano_report(_config(req)))

    @app.post("/relay/compare")
    def relay_compare(req: models.ExperimentRequest):
        return _csv(compare_scenarios(_config(req)))

    @app.post("/sweep")
    def sweep(req: models.ExperimentRequest):
        return _csv(sweep_report(_config(req)))

    @app.post("/relay/encode", response_model=models.RelayEncodeResponse)
    def relay_encode(req: models.RelayEncodeRequest):
        spec = _spec(req.spec_text)
        eps = _epsilon(req.epsilon, spec)
        p0y = spec.dmc.output_pmf(spec.p0)
        blocks = [Sequence.from_labels(p0y.alphabet, labels) for labels in req.blocks]
        data = encode_stream(blocks, p0y, eps)
        coder = TypicalSetCoder(p0y, blocks[0].n, eps)
        return models.RelayEncodeResponse(
            stream_b64=base64.b64encode(data).decode("ascii"),
            index_bits=coder.index_bits,
            raw_bits=coder.raw_bits,
        )

    @app.post("/relay/decode", response_model=models.RelayDecodeResponse)
    def relay_decode(req: models.RelayDecodeRequest):
        spec = _spec(req.spec_text)
        p0y = spec.dmc.output_pmf(spec.p0)
        try:
            raw = base64.b64decode(req.stream_b64, validate=True)
        except Exception:
            raise ConfigError("stream_b64 is not valid base64") from None
        blocks, eps = decode_stream(raw, p0y)
        return models.RelayDecodeResponse(
            blocks=[y.labels() for y in blocks], epsilon=eps
        )

    return app


app = create_app()
