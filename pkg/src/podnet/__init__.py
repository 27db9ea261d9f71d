"""Proof-of-delivery chains, probabilistic payouts and attack economics for
incentivized peer-to-peer content delivery."""

from .contract import SmartContract, eligibility_value, is_payment_eligible, new_contract
from .ledger import Ledger, QoSRecord, TxResult
from .podchain import (
    InitialCertificate,
    NonceWindow,
    PoDChain,
    ProofOfDelivery,
    ProviderState,
    append_pod,
    chain_digest,
    generate_pod,
    issue_ic,
    nonce_admit,
    read_chain_file,
    verify_chain,
    verify_ic,
    write_chain_file,
)
from .primitives import (
    KeyPair,
    PodnetError,
    canonical_decode,
    canonical_encode,
    hash_bytes,
    keygen_from_seed,
    keypair_for,
    sign_digest,
    verify_signature,
)
from .sim import SimConfig, load_config, run_scenario, run_sybil_sweep

__version__ = "0.1.0"
