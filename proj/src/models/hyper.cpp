#include "kt/models/hyper.hpp"

#include <cctype>
#include <stdexcept>
#include <string>

namespace kt::models {

const char* family_name(Family f) {
  switch (f) {
    case Family::Bkt: return "BKT";
    case Family::Pfa: return "PFA";
    case Family::Dkt: return "DKT";
    case Family::SaktKc: return "SAKT-KC";
    case Family::SaktE: return "SAKT-E";
  }
  throw std::logic_error("family_name: bad enum");
}

Family parse_family(const std::string& s) {
  std::string up;
  for (char c : s) up.push_back(char(std::toupper(static_cast<unsigned char>(c))));
  if (up == "BKT") return Family::Bkt;
  if (up == "PFA") return Family::Pfa;
  if (up == "DKT") return Family::Dkt;
  if (up == "SAKT-KC" || up == "SAKT_KC" || up == "SAKTKC") return Family::SaktKc;
  if (up == "SAKT-E" || up == "SAKT_E" || up == "SAKTE") return Family::SaktE;
  throw std::invalid_argument("unknown model family: " + s);
}

bool is_deep(Family f) {
  return f == Family::Dkt || f == Family::SaktKc || f == Family::SaktE;
}

nlohmann::json Hyperparams::to_json() const {
  return {{"num_steps", num_steps},
          {"batch_size", batch_size},
          {"d_model", d_model},
          {"num_epochs", num_epochs},
          {"dropout_rate", dropout_rate},
          {"learn_rate", learn_rate},
          {"reg_lambda", reg_lambda},
          {"num_heads", num_heads},
          {"learn_decay_rate", learn_decay_rate}};
}

Hyperparams Hyperparams::from_json(const nlohmann::json& j) {
  Hyperparams h;
  h.num_steps = j.at("num_steps");
  h.batch_size = j.at("batch_size");
  h.d_model = j.at("d_model");
  h.num_epochs = j.at("num_epochs");
  h.dropout_rate = j.at("dropout_rate");
  h.learn_rate = j.at("learn_rate");
  h.reg_lambda = j.value("reg_lambda", 0.0);
  h.num_heads = j.value("num_heads", std::size_t{1});
  h.learn_decay_rate = j.value("learn_decay_rate", 1.0);
  return h;
}

Hyperparams tuned_defaults(Family f) {
  Hyperparams h;
  switch (f) {
    case Family::Dkt:
      h.num_steps = 40;
      h.batch_size = 16;
      h.d_model = 96;
      h.num_epochs = 100;
      h.dropout_rate = 0.278;
      h.learn_rate = 2e-3;
      h.reg_lambda = 1.4e-5;
      break;
    case Family::SaktE:
      h.num_steps = 60;
      h.batch_size = 64;
      h.d_model = 352;
      h.num_epochs = 23;
      h.dropout_rate = 0.47;
      h.learn_rate = 1e-4;
      h.num_heads = 8;
      h.learn_decay_rate = 0.7;
      break;
    case Family::SaktKc:
      h.num_steps = 100;
      h.batch_size = 48;
      h.d_model = 128;
      h.num_epochs = 25;
      h.dropout_rate = 0.188;
      h.learn_rate = 1e-4;
      h.num_heads = 16;
      h.learn_decay_rate = 0.868;
      break;
    default:
      throw std::invalid_argument("tuned_defaults: no hyperparameters for classical families");
  }
  return h;
}

Hyperparams test_scale_defaults(Family f) {
  Hyperparams h = tuned_defaults(f);
  h.num_steps = 20;
  h.batch_size = 32;
  h.d_model = 32;
  h.num_epochs = f == Family::Dkt ? 8 : 6;
  h.num_heads = is_deep(f) && f != Family::Dkt ? 2 : h.num_heads;
  h.learn_rate = f == Family::Dkt ? 2e-3 : 1e-3;
  return h;
}

void validate_hyperparams(Family f, const Hyperparams& h) {
  if (!is_deep(f)) throw std::invalid_argument("hyperparameters only apply to deep families");
  if (h.num_steps == 0 || h.batch_size == 0 || h.d_model == 0 || h.num_epochs == 0)
    throw std::invalid_argument("hyperparameters must be positive");
  if (h.dropout_rate < 0.0 || h.dropout_rate >= 1.0)
    throw std::invalid_argument("dropout_rate outside [0, 1)");
  if (f != Family::Dkt) {
    if (h.num_heads == 0 || h.d_model % h.num_heads != 0)
      throw std::invalid_argument("d_model must be divisible by num_heads");
    if (h.learn_decay_rate <= 0.0 || h.learn_decay_rate > 1.0)
      throw std::invalid_argument("learn_decay_rate outside (0, 1]");
  }
}

}  // namespace kt::models
