"""Super-replication of the best pairs rebalancing rule in hindsight."""

__version__ = "0.1.0"

from .aggregator import (AggregateState, AggregateStrategy, RunResult, aggregate_init,
                         aggregate_step, aggregate_weights, run_full)
from .errors import BankruptError, HorizonError, InputError, PairHedgeError, ScaleGuardError
from .hindsight import (HindsightSolution, ReturnSequence, best_pair_rule,
                        best_pairs_rule_overall, best_s_rule, crp_wealth)
from .pricing import (Price, PriceQuery, horizon_for_tolerance, pairs_hedge_cost, price,
                      price_upper_bound, regret_bound)
from .uportfolio import PairEngineState, marginal_weight, pair_engine_init, pair_engine_step

__all__ = [
    "AggregateState", "AggregateStrategy", "RunResult", "aggregate_init", "aggregate_step",
    "aggregate_weights", "run_full", "BankruptError", "HorizonError", "InputError",
    "PairHedgeError", "ScaleGuardError", "HindsightSolution", "ReturnSequence",
    "best_pair_rule", "best_pairs_rule_overall", "best_s_rule", "crp_wealth", "Price",
    "PriceQuery", "horizon_for_tolerance", "pairs_hedge_cost", "price", "price_upper_bound",
    "regret_bound", "PairEngineState", "marginal_weight", "pair_engine_init", "pair_engine_step",
]
