#include "mrsig/eval_json.hpp"

#include "mrsig/errors.hpp"

namespace mrsig {

namespace {

nlohmann::ordered_json bootstrap_json(const BootstrapSummary& b) {
  return {{"mean", b.mean}, {"std", b.std}, {"resamples", b.resamples}};
}

BootstrapSummary bootstrap_from(const nlohmann::json& j) {
  return {j.at("mean").get<double>(), j.at("std").get<double>(),
          j.at("resamples").get<std::size_t>()};
}

}  // namespace

nlohmann::ordered_json report_to_json(const EvalReport& report) {
  nlohmann::ordered_json doc;
  doc["schema"] = "mrsig.eval_report";
  doc["version"] = kEvalReportVersion;
  doc["model"] = report.model;
  doc["n_instances"] = report.n_instances;
  doc["class_names"] = report.class_names;
  if (const auto& c = report.classification) {
    auto& j = doc["classification"];
    j["accuracy"] = c->accuracy;
    j["accuracy_bootstrap"] = bootstrap_json(c->accuracy_bootstrap);
    j["confusion"] = c->confusion;
    j["f1"] = c->f1;
    auto& roc = j["roc"] = nlohmann::ordered_json::array();
    for (const auto& curve : c->roc) {
      if (!curve) {
        roc.push_back(nullptr);
        continue;
      }
      nlohmann::ordered_json pts = nlohmann::ordered_json::array();
      for (const auto& p : curve->points) pts.push_back({p.fpr, p.tpr});
      roc.push_back({{"auc", curve->auc}, {"points", std::move(pts)}});
    }
  }
  if (const auto& r = report.regression) {
    doc["regression"] = {{"mae", r->mae}, {"mae_bootstrap", bootstrap_json(r->mae_bootstrap)}};
  }
  return doc;
}

EvalReport report_from_json(const nlohmann::json& doc) {
  if (doc.value("schema", "") != "mrsig.eval_report" ||
      doc.value("version", 0) != kEvalReportVersion)
    throw InvalidArgument("not an mrsig.eval_report v1 document");
  try {
    EvalReport report;
    report.model = doc.at("model").get<std::string>();
    report.n_instances = doc.at("n_instances").get<std::size_t>();
    report.class_names = doc.at("class_names").get<std::vector<std::string>>();
    if (doc.contains("classification")) {
      const auto& j = doc.at("classification");
      ClassificationMetrics c;
      c.accuracy = j.at("accuracy").get<double>();
      c.accuracy_bootstrap = bootstrap_from(j.at("accuracy_bootstrap"));
      c.confusion = j.at("confusion").get<ConfusionMatrix>();
      c.f1 = j.at("f1").get<std::vector<double>>();
      for (const auto& curve : j.at("roc")) {
        if (curve.is_null()) {
          c.roc.emplace_back(std::nullopt);
          continue;
        }
        RocCurve roc;
        roc.auc = curve.at("auc").get<double>();
        for (const auto& p : curve.at("points"))
          roc.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        c.roc.emplace_back(std::move(roc));
      }
      report.classification = std::move(c);
    }
    if (doc.contains("regression")) {
      const auto& j = doc.at("regression");
      report.regression = RegressionMetrics{j.at("mae").get<double>(),
                                            bootstrap_from(j.at("mae_bootstrap"))};
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("eval report: ") + e.what());
  }
}

}  // namespace mrsig
