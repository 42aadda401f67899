#include "kt/models/model_io.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "kt/num/archive.hpp"

namespace kt::models {

namespace {

void write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << body;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<std::string> tensor_names(const DktNet& net) {
  std::vector<std::string> names;
  if (net.has_input_embedding()) names.push_back("input_table");
  const char* gates = "ifgo";
  for (int g = 0; g < 4; ++g) {
    std::string suffix(1, gates[g]);
    names.push_back("wx_" + suffix);
    names.push_back("bx_" + suffix);
    names.push_back("wh_" + suffix);
    names.push_back("bh_" + suffix);
  }
  names.push_back("w_out");
  names.push_back("b_out");
  return names;
}

std::vector<std::string> tensor_names(const SaktNet&) {
  return {"interaction_emb", "response_emb", "position_emb", "query_emb",
          "wq",              "wk",           "wv",           "wo",
          "w1",              "b1",           "w2",           "b2",
          "ln1_gain",        "ln1_bias",     "ln2_gain",     "ln2_bias",
          "w_y",             "b_y"};
}

nlohmann::json vocab_json(const data::Vocabulary& vocab) {
  return {{"kcs", vocab.kc_ids()}, {"exercises", vocab.exercise_ids()}};
}

data::Vocabulary vocab_from_json(const nlohmann::json& j) {
  data::Vocabulary vocab;
  for (const auto& id : j.at("kcs")) vocab.add_kc(id.get<std::string>());
  for (const auto& id : j.at("exercises")) vocab.add_exercise(id.get<std::string>());
  return vocab;
}

void save_deep(const std::string& path, const DeepModel& model) {
  num::Archive ar;
  ar.meta = {{"family", family_name(model.family())},
             {"hyper", model.hyper().to_json()},
             {"seed", model.train_seed()},
             {"training_curve", model.training_curve()},
             {"vocab", vocab_json(model.vocab())},
             {"vocab_hash", model.vocab().hash()}};
  std::vector<const num::Tensor*> tensors;
  std::vector<std::string> names;
  if (const DktNet* net = model.dkt()) {
    tensors = net->trainable();
    names = tensor_names(*net);
  } else {
    tensors = model.sakt()->trainable();
    names = tensor_names(*model.sakt());
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) ar.add(names[i], *tensors[i]);
  ar.write(path);
}

ModelPtr load_deep(const std::string& path) {
  num::Archive ar = num::Archive::read(path);
  Family family = parse_family(ar.meta.at("family"));
  Hyperparams hyper = Hyperparams::from_json(ar.meta.at("hyper"));
  data::Vocabulary vocab = vocab_from_json(ar.meta.at("vocab"));
  std::uint64_t seed = ar.meta.at("seed");

  std::shared_ptr<DeepModel> model;
  if (family == Family::Dkt) {
    DktNet net(vocab.kc_count(), hyper, seed);
    std::vector<num::Tensor*> tensors = net.trainable();
    std::vector<std::string> names = tensor_names(net);
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      const num::Tensor& stored = ar.get(names[i]);
      if (!stored.same_shape(*tensors[i]))
        throw std::runtime_error("model archive shape mismatch on " + names[i]);
      *tensors[i] = stored;
    }
    model = std::make_shared<DeepModel>(family, std::move(vocab), std::move(net));
  } else {
    std::size_t v = family == Family::SaktE ? vocab.exercise_count() : vocab.kc_count();
    SaktNet net(v, hyper, seed);
    std::vector<num::Tensor*> tensors = net.trainable();
    std::vector<std::string> names = tensor_names(net);
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      const num::Tensor& stored = ar.get(names[i]);
      if (!stored.same_shape(*tensors[i]))
        throw std::runtime_error("model archive shape mismatch on " + names[i]);
      *tensors[i] = stored;
    }
    model = std::make_shared<DeepModel>(family, std::move(vocab), std::move(net));
  }
  model->set_train_seed(seed);
  if (ar.meta.contains("training_curve"))
    model->set_training_curve(ar.meta.at("training_curve").get<std::vector<double>>());
  return model;
}

}  // namespace

void save_model(const std::string& path, const FittedModel& model) {
  switch (model.family()) {
    case Family::Bkt:
      write_text(path, static_cast<const BktModel&>(model).to_json().dump(2) + "\n");
      return;
    case Family::Pfa:
      write_text(path, static_cast<const PfaModel&>(model).to_json().dump(2) + "\n");
      return;
    default:
      save_deep(path, static_cast<const DeepModel&>(model));
      return;
  }
}

ModelPtr load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  char head[6] = {};
  in.read(head, 6);
  bool archive = in.gcount() == 6 && std::memcmp(head, num::kArchiveMagic, 6) == 0;
  in.close();
  if (archive) return load_deep(path);

  std::ifstream text(path);
  nlohmann::json j = nlohmann::json::parse(text);
  Family family = parse_family(j.at("family"));
  if (family == Family::Bkt) return std::make_shared<BktModel>(BktModel::from_json(j));
  if (family == Family::Pfa) return std::make_shared<PfaModel>(PfaModel::from_json(j));
  throw std::runtime_error("unexpected family in JSON model file: " + path);
}

}  // namespace kt::models
