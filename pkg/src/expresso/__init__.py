"""Privacy-preserving single sign-on with zero-knowledge membership proofs.

Relying parties prove to an identity provider that they hold a signed
client identifier -- without revealing which identifier -- via a Groth16
proof over a standardized circuit, and users get per-relying-party
pseudonyms derived from proof digests so colluding parties cannot link
them.  See README.md for the architecture and the acceptance suite.
"""

from .ceremony import (
    CeremonyTranscript,
    Phase1Parameters,
    ZkArtifacts,
    contribute,
    finalize,
    phase1_generate,
    prepare_circuit,
    run_ceremony,
    verify_transcript,
)
from .groth16 import Proof, ProvingKey, VerificationKey, prove, verify
from .harness import PROFILES, build_stack, run_bench, run_scenario
from .idp import IdentityProvider, derive_ppid
from .poseidon import circuit_hash
from .program import (
    BoilerplateProgram,
    build_witness,
    canonical_membership_program,
    compile_program,
    membership_source,
)
from .registry import OidfRegistry, RegistryClient, RegistryConfig
from .rp import MembershipProof, RelyingParty
from .schnorr import (
    ClientCredential,
    SchemeParams,
    Signature,
    SigningKeyPair,
    generate_signing_keypair,
    sign,
    verify_native,
)
from .useragent import UserAgent

__all__ = [
    "BoilerplateProgram",
    "CeremonyTranscript",
    "ClientCredential",
    "IdentityProvider",
    "MembershipProof",
    "OidfRegistry",
    "PROFILES",
    "Phase1Parameters",
    "Proof",
    "ProvingKey",
    "RegistryClient",
    "RegistryConfig",
    "RelyingParty",
    "SchemeParams",
    "Signature",
    "SigningKeyPair",
    "UserAgent",
    "VerificationKey",
    "ZkArtifacts",
    "build_stack",
    "build_witness",
    "canonical_membership_program",
    "circuit_hash",
    "compile_program",
    "contribute",
    "derive_ppid",
    "finalize",
    "generate_signing_keypair",
    "membership_source",
    "phase1_generate",
    "prepare_circuit",
    "prove",
    "run_bench",
    "run_ceremony",
    "run_scenario",
    "sign",
    "verify",
    "verify_native",
    "verify_transcript",
]

__version__ = "0.1.0"
