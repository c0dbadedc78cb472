#include "madirl/envs/game.hpp"
#include "madirl/envs/particle.hpp"
#include "madirl/envs/toy.hpp"

#include "madirl/common/errors.hpp"

namespace madirl::envs {

std::unique_ptr<Env> make_env(const std::string& id) {
  if (id == "toy_coop") return std::make_unique<ToyCoop>();
  if (id == "coop_comm") return make_coop_comm();
  if (id == "coop_nav") return make_coop_nav();
  if (id == "keep_away") return make_keep_away();
  const std::string prefix = "rover_tower:";
  if (id.rfind(prefix, 0) == 0) {
    const auto tail = id.substr(prefix.size());
    if (tail == "8" || tail == "12" || tail == "16") return make_rover_tower(std::stoi(tail));
  }
  throw ConfigError("unknown environment id '" + id +
                    "' (expected keep_away, coop_comm, coop_nav, rover_tower:{8|12|16}, toy_coop)");
}

}  // namespace madirl::envs
