#include "synkin/types.hpp"

namespace synkin {

std::string to_string(Condition c) {
  switch (c) {
    case Condition::weight_free: return "WeightFree";
    case Condition::standard: return "Standard";
    case Condition::fatigue: return "Fatigue";
  }
  raise(errc::invalid_argument, "unknown condition value");
}

Condition parse_condition(const std::string& name) {
  for (Condition c : all_conditions) {
    if (to_string(c) == name) return c;
  }
  raise(errc::invalid_argument, "unknown condition name: " + name);
}

Index label_index(const std::vector<std::string>& labels, const std::string& name) {
  for (Index i = 0; i < static_cast<Index>(labels.size()); ++i) {
    if (labels[static_cast<size_t>(i)] == name) return i;
  }
  raise(errc::missing_channel, "channel not found: " + name);
}

}  // namespace synkin
