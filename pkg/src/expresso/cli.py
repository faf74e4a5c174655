"""Command-line entry points.

    expresso up                      start registry + identity provider, stay up
    expresso scenario <file>         run a scenario script
    expresso bench --reps 50         measure the login path, print a report
    expresso attack integrity|collusion|revocation
    expresso rp <op>                 relying-party operations with a state file

``scenario`` and ``bench`` build a throwaway in-process deployment by
default; pass ``--attach REGISTRY_URL IDP_URL`` (with ``--user name:pass``)
to drive services started elsewhere with ``expresso up`` -- that is the
multi-process mode.  ``--fast-setup`` switches the registry to the
trapdoor-retaining preparation path (identical keys, much faster at large
degrees; test mode only, see README).
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import harness
from .harness import (
    PROFILES,
    AttachedStack,
    ScenarioError,
    ScenarioScript,
    StepFailure,
    build_stack,
    emit_report,
    run_bench,
    run_scenario,
)


def _add_stack_args(parser, attachable: bool = False):
    parser.add_argument("--profile", choices=sorted(PROFILES), default="reduced",
                        help="deployment profile (default: reduced)")
    parser.add_argument("--pool", type=int, default=1,
                        help="initial artifact pool size")
    parser.add_argument("--fast-setup", action="store_true",
                        help="use the trapdoor-retaining preparation path "
                             "(test mode; identical keys, much faster)")
    parser.add_argument("--data-dir", default=None,
                        help="registry persistence directory")
    if attachable:
        parser.add_argument("--attach", nargs=2, metavar=("REGISTRY_URL", "IDP_URL"),
                            help="drive already-running services instead of "
                                 "building an in-process deployment")
        parser.add_argument("--user", action="append", default=[],
                            metavar="NAME:PASSWORD",
                            help="credentials for --attach mode (repeatable)")


def _build(args):
    attach = getattr(args, "attach", None)
    if attach:
        users = dict(u.split(":", 1) for u in args.user)
        return AttachedStack(attach[0], attach[1], users=users)
    print("building %s-profile stack (this runs a setup ceremony)..."
          % args.profile, file=sys.stderr)
    t0 = time.perf_counter()
    stack = build_stack(args.profile, pool=args.pool,
                        fast_prep=args.fast_setup, data_dir=args.data_dir)
    print("stack up in %.1fs  registry=%s  idp=%s"
          % (time.perf_counter() - t0, stack.registry_url, stack.idp_url),
          file=sys.stderr)
    return stack


def cmd_up(args) -> int:
    stack = _build(args)
    print("registry: %s" % stack.registry_url)
    print("identity provider: %s" % stack.idp_url)
    print("users: " + ", ".join("%s:%s" % (u, p) for u, p in stack.users.items()))
    print("press Ctrl-C to stop")
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        stack.stop()
    return 0


def cmd_scenario(args) -> int:
    try:
        with open(args.file) as fh:
            script = ScenarioScript.parse(fh.read())
    except OSError as exc:
        print("cannot read scenario: %s" % exc, file=sys.stderr)
        return 2
    except ScenarioError as exc:
        print("invalid scenario: %s" % exc, file=sys.stderr)
        return 2
    stack = _build(args)
    try:
        outcomes = run_scenario(stack, script)
    except StepFailure as exc:
        print("FAIL %s" % exc)
        return 1
    finally:
        stack.stop()
    for out in outcomes:
        print("ok  [%2d] %-40s %8.1f ms  %s"
              % (out.index, out.step, out.elapsed_ms, out.detail))
    return 0


def cmd_bench(args) -> int:
    stack = _build(args)
    try:
        report = run_bench(stack, reps=args.reps)
    finally:
        stack.stop()
    print(emit_report(report, args.format))
    return 0


def cmd_attack(args) -> int:
    stack = _build(args)
    runner = {
        "integrity": harness.attack_integrity,
        "collusion": harness.attack_collusion,
        "revocation": harness.attack_revocation,
    }[args.kind]
    try:
        ok, detail = runner(stack)
    finally:
        stack.stop()
    print(("defended: " if ok else "VIOLATION: ") + detail)
    return 0 if ok else 1


# -- relying-party operations ---------------------------------------------------

def _load_rp(args):
    from .registry import RegistryClient
    from .rp import RelyingParty

    with open(args.state) as fh:
        state = json.load(fh)
    oidf = RegistryClient(state["oidf_url"], actor="rp:" + state["name"])
    rp = RelyingParty.from_state(state, oidf)
    return rp, state


def _save_rp(args, rp, oidf_url):
    state = rp.to_state()
    state["oidf_url"] = oidf_url
    with open(args.state, "w") as fh:
        json.dump(state, fh)


def cmd_rp(args) -> int:
    from .registry import RegistryClient
    from .rp import AccessDenied, IntegrityMismatch, RelyingParty
    from .useragent import LoginFailed, UserAgent

    try:
        if args.op == "register":
            oidf = RegistryClient(args.oidf_url, actor="rp:" + args.name)
            rp = RelyingParty(args.name, oidf, args.idp_url, args.idp_id)
            rp.register()
            _save_rp(args, rp, args.oidf_url)
            print("registered %r; artifact version %d, digest %s"
                  % (args.name, rp.artifacts.version,
                     rp.artifacts.artifact_digest.hex()[:16]))
            return 0

        rp, state = _load_rp(args)
        if args.op == "check":
            ok = rp.check_artifact_integrity(rp.artifacts)
            print("artifact integrity: %s (version %d)"
                  % ("ok" if ok else "MISMATCH", rp.artifacts.version))
            return 0 if ok else 1
        if args.op == "prove":
            t0 = time.perf_counter()
            proof = rp.generate_proof()
            _save_rp(args, rp, state["oidf_url"])
            print("proof ready in %.1f ms, %d bytes, artifact version %d"
                  % ((time.perf_counter() - t0) * 1000.0,
                     len(proof.to_bytes()), proof.artifact_version))
            return 0
        if args.op == "login":
            ua = UserAgent("cli-browser")
            try:
                subject, claims = ua.login(rp, rp.idp_url, args.user,
                                           args.password,
                                           args.scope.split(","))
            except LoginFailed as exc:
                print("login failed: %s (%s)" % (exc.code, exc))
                return 1
            _save_rp(args, rp, state["oidf_url"])
            print("subject %s" % subject)
            print("claims  %s" % json.dumps(claims, sort_keys=True))
            return 0
        if args.op == "refresh":
            try:
                changed = rp.refresh_artifacts()
            except AccessDenied:
                print("refresh refused: this party is no longer registered")
                return 1
            _save_rp(args, rp, state["oidf_url"])
            print("artifacts %s (version %d)"
                  % ("updated, proof cache invalidated" if changed else "unchanged",
                     rp.artifacts.version))
            return 0
        if args.op == "deregister":
            result = rp.deregister()
            print("deregistered; provider rotated to version %s"
                  % result.get("new_version", "deferred"))
            return 0
    except IntegrityMismatch as exc:
        print("integrity failure: %s" % exc, file=sys.stderr)
        return 1
    raise AssertionError("unhandled rp op")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="expresso", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_up = sub.add_parser("up", help="start the services and stay up")
    _add_stack_args(p_up)
    p_up.set_defaults(fn=cmd_up)

    p_sc = sub.add_parser("scenario", help="run a scenario script")
    p_sc.add_argument("file")
    _add_stack_args(p_sc, attachable=True)
    p_sc.set_defaults(fn=cmd_scenario)

    p_be = sub.add_parser("bench", help="measure the login path")
    p_be.add_argument("--reps", type=int, default=50)
    p_be.add_argument("--format", choices=("text", "json"), default="text")
    _add_stack_args(p_be, attachable=True)
    p_be.set_defaults(fn=cmd_bench)

    p_at = sub.add_parser("attack", help="run an attack scenario")
    p_at.add_argument("kind", choices=("integrity", "collusion", "revocation"))
    _add_stack_args(p_at)
    p_at.set_defaults(fn=cmd_attack)

    p_rp = sub.add_parser("rp", help="relying-party operations")
    p_rp.add_argument("op", choices=("register", "check", "prove", "login",
                                     "refresh", "deregister"))
    p_rp.add_argument("--state", required=True, help="state file path")
    p_rp.add_argument("--name", default="cli-rp")
    p_rp.add_argument("--oidf-url", help="trust-anchor base URL (register)")
    p_rp.add_argument("--idp-url", help="identity-provider base URL (register)")
    p_rp.add_argument("--idp-id", default="idp-main")
    p_rp.add_argument("--user", help="username (login)")
    p_rp.add_argument("--password", help="password (login)")
    p_rp.add_argument("--scope", default="name", help="comma-separated claims")
    p_rp.set_defaults(fn=cmd_rp)

    args = parser.parse_args(argv)
    if getattr(args, "op", None) == "register" and not (args.oidf_url and args.idp_url):
        parser.error("rp register needs --oidf-url and --idp-url")
    if getattr(args, "op", None) == "login" and not (args.user and args.password):
        parser.error("rp login needs --user and --password")
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
