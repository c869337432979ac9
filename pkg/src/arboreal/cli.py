"""Command line client.

Requests go to the HTTP API: in process by default, or to a running server
given by --url.  The client writes the returned JSON and CSV and turns the
`ok` flag into the exit code.
"""
from __future__ import annotations

import sys
import warnings
from pathlib import Path

import click

from .experiments import ExperimentConfig, to_json_text


def _client(url):
    if url:
        import httpx
        return httpx.Client(base_url=url, timeout=None)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient
    from .api import app
    return TestClient(app)


def _submit(ctx, verb: str, cfg: ExperimentConfig) -> None:
    url, out = ctx.obj["url"], ctx.obj.get("out")
    body = {"name": cfg.name, "params": cfg.params, "samples": cfg.samples, "seed": cfg.seed}
    with _client(url) as client:
        resp = client.post(f"/run/{verb}", json=body)
    if resp.status_code != 200:
        click.echo(resp.text, err=True)
        sys.exit(2)
    data = resp.json()
    text = to_json_text(data["result"])
    out = out or cfg.out
    if out:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        (d / f"{verb}.json").write_text(text)
        if data.get("csv") is not None:
            (d / f"{verb}.csv").write_text(data["csv"])
    else:
        click.echo(text, nl=False)
    if ctx.obj.get("csv") and data.get("csv") is not None:
        click.echo(data["csv"], nl=False)
    click.echo(f"{verb}: {'PASS' if data['ok'] else 'FAIL'}", err=True)
    sys.exit(0 if data["ok"] else 1)


def _config(name, config, samples, seed, params) -> ExperimentConfig:
    if config:
        cfg = ExperimentConfig.load(config)
    else:
        cfg = ExperimentConfig(name)
    cfg.params = {**cfg.params, **{k: v for k, v in params.items() if v is not None}}
    if samples is not None:
        cfg.samples = samples
    if seed is not None:
        cfg.seed = seed
    return cfg


def _store_out(ctx, param, value):
    if value:
        ctx.find_root().obj["out"] = value


def _common(f):
    f = click.option("--out", type=click.Path(file_okay=False), expose_value=False,
                     callback=_store_out, help="Output directory.")(f)
    f = click.option("--config", type=click.Path(exists=True, dir_okay=False), help="Config JSON file.")(f)
    f = click.option("--samples", type=int, default=None)(f)
    f = click.option("--seed", type=int, default=None)(f)
    return f


@click.group()
@click.option("--url", default=None, help="Base URL of a running arboreal service.")
@click.option("--out", default=None, type=click.Path(file_okay=False), help="Output directory.")
@click.option("--csv", "show_csv", is_flag=True, help="Also print the CSV table to stdout.")
@click.pass_context
def main(ctx, url, out, show_csv):
    """Exact tree-automorphism checks and horospherical dynamics experiments."""
    ctx.obj = {"url": url, "out": out, "csv": show_csv}


def _experiment(verb):
    @main.command(verb)
    @_common
    @click.option("--q", "q", type=int, default=None)
    @click.pass_context
    def cmd(ctx, config, samples, seed, q):
        _submit(ctx, verb, _config(verb, config, samples, seed, {"q": q}))
    cmd.__doc__ = f"Run the {verb} experiment."
    return cmd


for _verb in ("equidist", "hedlund", "average", "minimality"):
    _experiment(_verb)


@main.group(invoke_without_command=True)
@_common
@click.pass_context
def verify(ctx, config, samples, seed):
    """Run the exact algebraic suite (or a sub-suite)."""
    if ctx.invoked_subcommand is None:
        _submit(ctx, "verify", _config("verify", config, samples, seed, {}))


@verify.command("psi-phi")
@click.option("--shape", default="3,3")
@click.option("--i", "i", type=int, default=1)
@click.option("--depth", type=int, default=3)
@click.option("--seed", type=int, default=0)
@click.pass_context
def verify_psi_phi(ctx, shape, i, depth, seed):
    """Exhaustive drift-map checks; prints {checks: [...]}."""
    cfg = ExperimentConfig("verify-psi-phi", {"shape": shape, "i": i, "depth": depth}, seed=seed)
    _submit(ctx, "verify-psi-phi", cfg)


@main.command()
@_common
@click.option("--shape", default=None)
@click.pass_context
def haar(ctx, config, samples, seed, shape):
    """Haar values against both brute-force counts."""
    _submit(ctx, "haar", _config("haar", config, samples, seed, {"shape": shape}))


@main.command()
@_common
@click.option("--shape", default=None)
@click.pass_context
def folner(ctx, config, samples, seed, shape):
    """Exact defect table (CSV: n, defect_num, defect_den, defect_float)."""
    _submit(ctx, "folner", _config("folner", config, samples, seed, {"shape": shape}))


@main.command("rn-check")
@_common
@click.option("--shape", default=None)
@click.option("--i", "i", type=int, default=None)
@click.option("--radius", type=int, default=None)
@click.pass_context
def rn_check_cmd(ctx, config, samples, seed, shape, i, radius):
    """Coset-level density check of the drift map."""
    _submit(ctx, "rn-check", _config("rn-check", config, samples, seed,
                                     {"shape": shape, "i": i, "radius": radius}))


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host, port):
    """Start the HTTP service."""
    import uvicorn
    uvicorn.run("arboreal.api:app", host=host, port=port)


if __name__ == "__main__":
    main()
