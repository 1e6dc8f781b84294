#pragma once

// JSON encodings of the domain types. Complex numbers are [re, im] pairs (a
// bare number is read as a real value). Operator and kernel matrices are
// written row-indexed by the source site x, i.e. rows hold T(x, .).

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qot/functionals.hpp"
#include "qot/game.hpp"
#include "qot/qfa.hpp"
#include "qot/state_space.hpp"
#include "qot/transport.hpp"
#include "qot/walk.hpp"

namespace qot::io {

using Json = nlohmann::json;

Json complex_to_json(Complex z);
Complex complex_from_json(const Json& j);
Json vector_to_json(const CVector& v);
CVector cvector_from_json(const Json& j);
std::vector<double> reals_from_json(const Json& j);
RMatrix real_matrix_from_json(const Json& j);
CMatrix complex_matrix_from_json(const Json& j);
Json matrix_to_json(const CMatrix& m);
Json matrix_to_json(const RMatrix& m);

Json grid_to_json(const SiteGrid& grid);
/// Labels are integers or [first, second] pairs.
SiteGrid grid_from_json(const Json& j);

transport::TransportInstance transport_instance_from_json(const Json& j);
Json transport_instance_to_json(const transport::TransportInstance& inst);
transport::TransportPlan transport_plan_from_json(const Json& j);
Json transport_plan_to_json(const transport::TransportPlan& plan);
transport::AnnealSchedule anneal_schedule_from_json(const Json& j);
Json anneal_schedule_to_json(const transport::AnnealSchedule& s);

Json state_to_json(const PureState& s);
/// {"amplitudes": [...], "grid"?: [...]}, or a bare amplitude list.
PureState state_from_json(const Json& j, const std::optional<SiteGrid>& grid);

/// Rows indexed by x; stored transposed in the LinearOp.
Json operator_to_json(const LinearOp& op);
LinearOp operator_from_json(const Json& j, const SiteGrid& grid);

CostKernel kernel_from_json(const Json& j, const SiteGrid& grid);
Json kernel_to_json(const CostKernel& k);

functionals::TransportProblem problem_from_json(const Json& j);

walk::Coin coin_from_json(const Json& j, int t);
Json coin_to_json(const walk::Coin& c);
/// A single coin applies to every step; a list gives one coin per step.
std::vector<walk::Coin> coins_from_json(const Json& j, int steps);
walk::WalkerState walker_state_from_json(const Json& j);
Json walker_state_to_json(const walk::WalkerState& s);
walk::WalkTarget walk_target_from_json(const Json& j);

qfa::Automaton automaton_from_json(const Json& j);
Json automaton_to_json(const qfa::Automaton& aut);
qfa::Word word_from_json(const qfa::Automaton& aut, const Json& j);

game::PayoffTable payoffs_from_json(const Json& j);
game::RepeatedGameSpec game_spec_from_json(const Json& j);
game::QuantumStrategy strategy_from_json(const Json& j);
game::RepeatedOptions repeated_options_from_json(const Json& j);

}  // namespace qot::io
