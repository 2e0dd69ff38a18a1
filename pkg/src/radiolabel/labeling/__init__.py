"""Label formats, the bipartite derandomizer and the centralized label oracles."""

from .bipartite import BipartiteInstance, SelectionError, derandomize_bipartite, isolated, required_size
from .labels import (
    ACK_WIDTH,
    CORE_WIDTH,
    BroadcastLabel,
    GatherLabel,
    Label,
    LabelError,
    LabelTable,
    label_width,
    load_table,
    save_table,
    table_width,
)
from .oracle import (
    BlockRecord,
    BudgetExhausted,
    ExecutorSimulation,
    OracleError,
    OracleState,
    StageRecord,
    assign_ack_bits,
    assign_executor_labels,
    assign_express_labels,
    assign_fast_labels,
    express_round_bound,
    express_residue,
    fast_deadline,
    minimal_dominating,
    next_matching,
)

__all__ = [name for name in dir() if not name.startswith("_")]
