"""Payment-channel bridge engine.

A Bitcoin payment channel anchored on a simulated UTXO ledger, with payment
verification delegated to a contract on a simulated consortium chain: the
payer submits bare (signature, amount) pairs, the contract recovers the
signing key and compares addresses, and the payee settles the exported
final state back on the Bitcoin side.  Includes the cancellable channel
variant (hash-locked remittance outputs with disclosed pre-images) and
adversarial settlement scenarios.
"""

from .consortium import ConsortiumChain, ConsortiumTx
from .contract import BridgeContract, ContractError, DepositInfo, ServiceContract
from .crypto import (
    KeyPair,
    PublicKey,
    RecoverableSignature,
    ecdsa_recover,
    ecdsa_sign,
    ecdsa_verify,
    eth_address,
    hash160,
    keccak256,
    ripemd160,
    sha256d,
)
from .interpreter import ExecContext, ScriptError, eval_script
from .ledger import Ledger, LedgerError, build_funding_redeem, build_funding_tx
from .nodes import ChannelConfig, ProtocolError, ProviderNode, UserNode
from .scenarios import SCENARIOS, ScenarioConfig, ScenarioResult, run_scenario
from .templates import (
    ChannelParams,
    FundingRef,
    TemplateError,
    TransactionTemplate,
    build_redeem_script,
    build_template,
    complete_transaction,
    signature_form,
    validate_template,
)
from .tx import COIN, Transaction, TxInput, TxOutput

__version__ = "0.1.0"

__all__ = [
    "COIN",
    "BridgeContract",
    "ChannelConfig",
    "ChannelParams",
    "ConsortiumChain",
    "ConsortiumTx",
    "ContractError",
    "DepositInfo",
    "ExecContext",
    "FundingRef",
    "KeyPair",
    "Ledger",
    "LedgerError",
    "ProtocolError",
    "ProviderNode",
    "PublicKey",
    "RecoverableSignature",
    "SCENARIOS",
    "ScenarioConfig",
    "ScenarioResult",
    "ScriptError",
    "ServiceContract",
    "TemplateError",
    "Transaction",
    "TransactionTemplate",
    "TxInput",
    "TxOutput",
    "UserNode",
    "build_funding_redeem",
    "build_funding_tx",
    "build_redeem_script",
    "build_template",
    "complete_transaction",
    "ecdsa_recover",
    "ecdsa_sign",
    "ecdsa_verify",
    "eth_address",
    "eval_script",
    "hash160",
    "keccak256",
    "ripemd160",
    "run_scenario",
    "sha256d",
    "signature_form",
    "validate_template",
]
