// Built-in paediatric question bank and the disease profiles derived from it.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "icdlab/corpus.hpp"
#include "icdlab/errors.hpp"
#include "icdlab/random.hpp"

namespace icdlab {
namespace {

enum Domain { kHeadache = 0, kEar = 1, kRespiratory = 2 };

struct NumericShape {
  std::array<double, 3> mean{};  // per domain
  double signature_mean = 0.0;
  double sd = 1.0;
  double floor = 0.0;
  int decimals = 0;
};

struct BankEntry {
  std::string id;
  std::string text;
  std::vector<std::string> phrases;
  int tier;
  AnswerKind kind;
  std::array<double, 3> mention;  // p_mention per disease domain
  std::string signature;          // ICD code this question separates, or empty
  NumericShape numeric{};
};

BankEntry binary(int tier, std::string id, std::string text, std::vector<std::string> phrases,
                 std::array<double, 3> mention, std::string signature = {}) {
  return {std::move(id), std::move(text), std::move(phrases), tier, AnswerKind::binary,
          mention, std::move(signature), {}};
}

BankEntry numeric(int tier, std::string id, std::string text, std::vector<std::string> phrases,
                  std::array<double, 3> mention, NumericShape shape,
                  std::string signature = {}) {
  return {std::move(id), std::move(text), std::move(phrases), tier, AnswerKind::numeric,
          mention, std::move(signature), shape};
}

// Signature questions come first within each (tier, kind) group so that the
// default counts always include them.
const std::vector<BankEntry>& bank() {
  static const std::vector<BankEntry> entries = [] {
    std::vector<BankEntry> b;
    // Tier 1: complaint, history, symptoms.
    b.push_back(binary(1, "vomiting", "Is the patient vomiting?", {"vomiting", "throwing up"}, {0.6, 0.2, 0.15}, "G43.0"));
    b.push_back(binary(1, "worse_with_activity", "Is the pain worse with physical activity?", {"pain worse with activity", "pain worse on exertion"}, {0.55, 0.05, 0.05}, "G43.0"));
    b.push_back(binary(1, "motion_sickness", "Does the patient suffer from motion sickness?", {"motion sickness", "car sickness"}, {0.45, 0.05, 0.05}, "G43.0"));
    b.push_back(binary(1, "visual_aura", "Does the patient experience a visual aura?", {"visual aura", "flashing lights"}, {0.6, 0.03, 0.03}, "G43.1"));
    b.push_back(binary(1, "numbness", "Does the patient report numbness or tingling?", {"numbness", "tingling in the hands"}, {0.5, 0.05, 0.05}, "G43.1"));
    b.push_back(binary(1, "speech_disturbance", "Has the patient had speech disturbance?", {"speech disturbance", "trouble finding words"}, {0.4, 0.03, 0.03}, "G43.1"));
    b.push_back(binary(1, "pressing_pain", "Is the headache pressing or band-like?", {"pressing pain", "band like pain"}, {0.6, 0.05, 0.05}, "G44.2"));
    b.push_back(binary(1, "stress", "Is the patient under stress?", {"stress at school", "emotional stress"}, {0.5, 0.1, 0.1}, "G44.2"));
    b.push_back(binary(1, "screen_time", "Does the patient have long screen time?", {"long screen time", "many hours on screens"}, {0.45, 0.05, 0.05}, "G44.2"));
    b.push_back(binary(1, "ear_pain", "Does the patient have ear pain?", {"ear pain", "earache"}, {0.1, 0.85, 0.15}, "H66.9"));
    b.push_back(binary(1, "ear_tugging", "Is the child pulling at the ear?", {"ear tugging", "pulling at the ear"}, {0.03, 0.6, 0.05}, "H66.9"));
    b.push_back(binary(1, "rapid_breathing", "Is the patient breathing rapidly?", {"rapid breathing", "fast breathing"}, {0.03, 0.1, 0.6}, "J15.9"));
    b.push_back(binary(1, "chills", "Has the patient had chills?", {"chills", "shivering"}, {0.05, 0.2, 0.5}, "J15.9"));
    b.push_back(binary(1, "productive_cough", "Is the cough productive?", {"productive cough", "coughing up phlegm"}, {0.03, 0.1, 0.7}, "J20.9"));
    b.push_back(binary(1, "noisy_breathing", "Is there noisy breathing at home?", {"noisy breathing", "whistling when breathing"}, {0.03, 0.05, 0.5}, "J20.9"));
    b.push_back(binary(1, "recent_cold", "Did the illness follow a recent cold?", {"recent cold", "preceding cold"}, {0.05, 0.35, 0.55}, "J20.9"));
    b.push_back(binary(1, "headache", "Does the patient have a headache?", {"headache", "head pain"}, {0.9, 0.15, 0.1}));
    b.push_back(binary(1, "nausea", "Does the patient have nausea?", {"nausea", "feeling sick"}, {0.6, 0.15, 0.1}));
    b.push_back(binary(1, "photophobia", "Is the patient sensitive to light?", {"photophobia", "light sensitivity"}, {0.6, 0.03, 0.03}));
    b.push_back(binary(1, "phonophobia", "Is the patient sensitive to noise?", {"phonophobia", "noise sensitivity"}, {0.5, 0.03, 0.03}));
    b.push_back(binary(1, "unilateral_pain", "Is the headache one-sided?", {"one sided pain", "unilateral pain"}, {0.55, 0.05, 0.03}));
    b.push_back(binary(1, "pulsating_pain", "Is the headache pulsating?", {"throbbing pain", "pulsating pain"}, {0.55, 0.05, 0.03}));
    b.push_back(binary(1, "fever", "Does the patient have a fever?", {"fever", "pyrexia"}, {0.3, 0.75, 0.8}));
    b.push_back(binary(1, "cough", "Does the patient have a cough?", {"cough"}, {0.05, 0.35, 0.85}));
    b.push_back(binary(1, "ear_discharge", "Is there discharge from the ear?", {"ear discharge", "otorrhea"}, {0.02, 0.45, 0.05}));
    b.push_back(binary(1, "runny_nose", "Does the patient have a runny nose?", {"runny nose", "rhinorrhea"}, {0.05, 0.5, 0.55}));
    b.push_back(binary(1, "sore_throat", "Does the patient have a sore throat?", {"sore throat"}, {0.1, 0.3, 0.4}));
    b.push_back(binary(1, "shortness_of_breath", "Is the patient short of breath?", {"shortness of breath", "breathlessness"}, {0.03, 0.05, 0.55}));
    b.push_back(binary(1, "chest_pain", "Does the patient have chest pain?", {"chest pain"}, {0.05, 0.03, 0.4}));
    b.push_back(binary(1, "fatigue", "Is the patient fatigued?", {"fatigue", "tiredness"}, {0.35, 0.3, 0.4}));
    b.push_back(binary(1, "irritability", "Is the child irritable?", {"irritability", "fussiness"}, {0.1, 0.5, 0.2}));
    b.push_back(binary(1, "poor_appetite", "Does the patient have a poor appetite?", {"poor appetite", "reduced appetite"}, {0.15, 0.4, 0.4}));
    b.push_back(binary(1, "dizziness", "Does the patient feel dizzy?", {"dizziness", "lightheadedness"}, {0.4, 0.1, 0.05}));
    b.push_back(binary(1, "neck_stiffness", "Does the patient have neck stiffness?", {"neck stiffness", "stiff neck"}, {0.35, 0.05, 0.05}));
    b.push_back(binary(1, "sleep_problems", "Does the patient sleep poorly?", {"poor sleep", "sleep problems"}, {0.3, 0.3, 0.2}));
    b.push_back(binary(1, "recurrent_episodes", "Has the patient had similar episodes before?", {"recurrent episodes", "similar episodes before"}, {0.55, 0.3, 0.1}));
    b.push_back(binary(1, "family_history_migraine", "Is there a family history of migraine?", {"family history of migraine"}, {0.45, 0.02, 0.02}));
    b.push_back(binary(1, "abdominal_pain", "Does the patient have abdominal pain?", {"abdominal pain", "tummy ache"}, {0.25, 0.1, 0.1}));
    b.push_back(binary(1, "muscle_aches", "Does the patient have muscle aches?", {"muscle aches", "myalgia"}, {0.1, 0.1, 0.3}));
    b.push_back(binary(1, "hearing_loss", "Is hearing reduced?", {"reduced hearing", "muffled hearing"}, {0.03, 0.4, 0.03}));
    b.push_back(binary(1, "nasal_congestion", "Is the nose blocked?", {"nasal congestion", "blocked nose"}, {0.05, 0.4, 0.45}));
    b.push_back(binary(1, "poor_concentration", "Does the patient have trouble concentrating?", {"poor concentration", "difficulty concentrating"}, {0.3, 0.03, 0.03}));
    b.push_back(binary(1, "attends_daycare", "Does the child attend daycare?", {"attends daycare", "goes to kindergarten"}, {0.05, 0.35, 0.25}));
    b.push_back(binary(1, "night_sweats", "Does the patient have night sweats?", {"night sweats"}, {0.03, 0.05, 0.3}));
    b.push_back(binary(1, "rash", "Does the patient have a rash?", {"rash", "skin eruption"}, {0.05, 0.1, 0.1}));
    b.push_back(binary(1, "diarrhea", "Does the patient have diarrhea?", {"diarrhea", "loose stools"}, {0.05, 0.15, 0.1}));
    b.push_back(binary(1, "teeth_grinding", "Does the patient grind their teeth?", {"teeth grinding", "bruxism"}, {0.2, 0.02, 0.02}));
    b.push_back(binary(1, "sinus_pressure", "Is there facial or sinus pressure?", {"sinus pressure", "facial pressure"}, {0.2, 0.1, 0.15}));

    b.push_back(numeric(1, "temperature", "What is the patient's temperature?", {"temperature", "body temperature"}, {0.35, 0.8, 0.85},
                        {{36.9, 38.2, 38.0}, 39.2, 0.5, 35.0, 1}, "J15.9"));
    b.push_back(numeric(1, "heart_rate", "What is the patient's heart rate?", {"heart rate", "pulse"}, {0.3, 0.5, 0.75},
                        {{92.0, 105.0, 110.0}, 128.0, 10.0, 40.0, 0}, "J15.9"));
    b.push_back(numeric(1, "respiratory_rate", "What is the patient's respiratory rate?", {"respiratory rate", "breathing rate"}, {0.1, 0.3, 0.8},
                        {{20.0, 22.0, 28.0}, 38.0, 4.0, 8.0, 0}, "J15.9"));
    b.push_back(numeric(1, "pain_score", "How severe is the pain on a 0-10 scale?", {"pain score", "pain rating"}, {0.6, 0.45, 0.1},
                        {{6.5, 6.0, 3.0}, 0.0, 1.5, 0.0, 0}));

    // Tier 2: physical examination.
    b.push_back(binary(2, "bulging_tm", "Is the tympanic membrane bulging?", {"bulging eardrum", "bulging tympanic membrane"}, {0.03, 0.85, 0.1}, "H66.9"));
    b.push_back(binary(2, "red_tm", "Is the tympanic membrane red?", {"red eardrum", "inflamed tympanic membrane"}, {0.03, 0.8, 0.15}, "H66.9"));
    b.push_back(binary(2, "crackles", "Are crackles heard on auscultation?", {"crackles", "crepitations"}, {0.02, 0.05, 0.85}, "J15.9"));
    b.push_back(binary(2, "reduced_breath_sounds", "Are breath sounds reduced?", {"reduced breath sounds", "diminished air entry"}, {0.02, 0.03, 0.6}, "J15.9"));
    b.push_back(binary(2, "exam_wheeze", "Is there wheeze on auscultation?", {"expiratory wheeze", "wheeze on auscultation"}, {0.02, 0.05, 0.8}, "J20.9"));
    b.push_back(binary(2, "rhonchi", "Are rhonchi heard?", {"rhonchi", "coarse breath sounds"}, {0.02, 0.03, 0.6}, "J20.9"));
    b.push_back(binary(2, "pericranial_tenderness", "Is there pericranial muscle tenderness?", {"pericranial tenderness", "tender scalp muscles"}, {0.65, 0.02, 0.02}, "G44.2"));
    b.push_back(binary(2, "focal_neuro_signs", "Are there transient focal neurological signs?", {"focal neurological signs", "transient hemiparesis"}, {0.5, 0.02, 0.02}, "G43.1"));
    b.push_back(binary(2, "normal_neuro_exam", "Is the neurological examination normal?", {"normal neurological exam", "normal neuro status"}, {0.8, 0.05, 0.05}, "G43.0"));
    b.push_back(binary(2, "papilledema", "Is there papilledema?", {"papilledema", "swollen optic discs"}, {0.4, 0.02, 0.02}));
    b.push_back(binary(2, "meningism", "Are there signs of meningism?", {"meningism", "positive kernig sign"}, {0.35, 0.1, 0.05}));
    b.push_back(binary(2, "pharyngeal_redness", "Is the throat red?", {"red throat", "pharyngeal erythema"}, {0.05, 0.5, 0.45}));
    b.push_back(binary(2, "lymphadenopathy", "Are lymph nodes enlarged?", {"swollen lymph nodes", "lymphadenopathy"}, {0.1, 0.45, 0.35}));
    b.push_back(binary(2, "nasal_flaring", "Is there nasal flaring?", {"nasal flaring"}, {0.02, 0.03, 0.45}));
    b.push_back(binary(2, "chest_retractions", "Are there chest retractions?", {"chest retractions", "intercostal recession"}, {0.02, 0.03, 0.5}));
    b.push_back(binary(2, "ill_appearance", "Does the patient appear ill?", {"ill appearing", "toxic appearance"}, {0.2, 0.4, 0.5}));
    b.push_back(binary(2, "dry_mucosa", "Are the mucous membranes dry?", {"dry mucous membranes", "dry lips"}, {0.1, 0.2, 0.3}));
    b.push_back(binary(2, "conjunctivitis", "Are the eyes red?", {"red eyes", "conjunctivitis"}, {0.05, 0.25, 0.2}));
    b.push_back(binary(2, "sinus_tenderness", "Is there sinus tenderness?", {"sinus tenderness"}, {0.15, 0.1, 0.1}));
    b.push_back(numeric(2, "oxygen_saturation", "What is the oxygen saturation?", {"oxygen saturation", "spo2"}, {0.1, 0.3, 0.85},
                        {{98.8, 98.5, 96.0}, 92.5, 1.2, 70.0, 0}, "J15.9"));
    b.push_back(numeric(2, "capillary_refill", "What is the capillary refill time?", {"capillary refill time", "cap refill"}, {0.1, 0.2, 0.45},
                        {{1.8, 1.9, 2.0}, 2.6, 0.4, 0.5, 1}, "J15.9"));

    // Tier 3: diagnostics.
    b.push_back(binary(3, "chest_radiograph_infiltrate", "Does the chest radiograph show an infiltrate?", {"infiltrate on chest radiograph", "lobar consolidation"}, {0.02, 0.02, 0.6}, "J15.9"));
    b.push_back(binary(3, "rapid_strep", "Is the rapid strep test positive?", {"rapid strep test", "streptococcal antigen"}, {0.02, 0.2, 0.15}));
    b.push_back(binary(3, "urine_dipstick", "Is the urine dipstick abnormal?", {"abnormal urine dipstick"}, {0.05, 0.1, 0.05}));
    b.push_back(numeric(3, "crp", "What is the C-reactive protein level?", {"crp", "c reactive protein"}, {0.05, 0.35, 0.55},
                        {{3.0, 25.0, 15.0}, 95.0, 12.0, 0.5, 0}, "J15.9"));
    return b;
  }();
  return entries;
}

// Pronounceable filler words for questions beyond the bank.
std::string synthetic_word(size_t n) {
  static constexpr const char* kSyl[] = {"ka", "lo", "mi", "ru", "te", "vo", "sa", "ni", "pe", "du"};
  std::string w;
  do {
    w += kSyl[n % 10];
    n /= 10;
  } while (n > 0);
  return w + "ex";
}

QuestionTemplates make_templates(int tier, AnswerKind kind, std::vector<std::string> phrases,
                                 int decimals) {
  QuestionTemplates t;
  t.phrases = std::move(phrases);
  t.decimals = decimals;
  std::vector<std::string> frames;
  if (kind == AnswerKind::numeric) {
    switch (tier) {
      case 1: frames = {"{}.", "Vitals: {}.", "At triage {}."}; break;
      case 2: frames = {"{}.", "On examination {}."}; break;
      default: frames = {"{}.", "Results: {}."}; break;
    }
    for (const auto& f : frames) {
      for (const char* s : {"{p} {v}", "{p} of {v}", "{p} measured at {v}", "{p} was {v}"}) {
        t.numeric.push_back({f, s});
      }
    }
    return t;
  }
  std::vector<std::string> affirm;
  std::vector<std::string> negate;
  if (tier == 1) {
    frames = {"{}.", "Per parent {}.", "On history {}."};
    affirm = {"{p}", "has {p}", "complains of {p}", "reports {p}"};
    negate = {"no {p}", "denies {p}", "without {p}", "no complaints of {p}"};
  } else {
    frames = tier == 2 ? std::vector<std::string>{"{}.", "On examination {}.", "Exam: {}."}
                       : std::vector<std::string>{"{}.", "Tests: {}.", "Workup shows {}."};
    affirm = {"{p}", "{p} present", "{p} noted", "positive for {p}"};
    negate = {"no {p}", "{p} absent", "without {p}", "negative for {p}"};
  }
  for (const auto& f : frames) {
    for (const auto& s : affirm) t.affirmative.push_back({f, s});
    for (const auto& s : negate) t.negated.push_back({f, s});
  }
  return t;
}

double logit(double p) { return std::log(p / (1.0 - p)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

int domain_index(const std::string& domain) {
  if (domain == "headache") return kHeadache;
  if (domain == "ear") return kEar;
  if (domain == "respiratory") return kRespiratory;
  throw ValidationError("unknown disease domain: " + domain);
}

}  // namespace

std::vector<DiseaseSpec> default_diseases() {
  return {
      {"G43.0", "Migraine without aura", "headache"},
      {"G43.1", "Migraine with aura", "headache"},
      {"G44.2", "Tension-type headache", "headache"},
      {"H66.9", "Otitis media, unspecified", "ear"},
      {"J15.9", "Bacterial pneumonia, unspecified", "respiratory"},
      {"J20.9", "Acute bronchitis", "respiratory"},
  };
}

const DiseaseProfile& CatalogBundle::profile(std::string_view icd) const {
  for (const auto& p : profiles) {
    if (p.icd_code == icd) return p;
  }
  throw ValidationError("no disease profile for ICD code " + std::string(icd));
}

std::vector<std::string> CatalogBundle::disease_codes() const {
  std::vector<std::string> codes;
  for (const auto& p : profiles) codes.push_back(p.icd_code);
  return codes;
}

double expected_positive_ratio(const CatalogBundle& bundle, const std::vector<double>& prior) {
  const size_t k = bundle.profiles.size();
  double num = 0.0, den = 0.0;
  for (size_t d = 0; d < k; ++d) {
    const double w = prior.empty() ? 1.0 / static_cast<double>(k) : prior[d];
    for (size_t q = 0; q < bundle.catalog.size(); ++q) {
      if (bundle.catalog[q].answer_kind != AnswerKind::binary) continue;
      const auto& qp = bundle.profiles[d].questions[q];
      num += w * qp.p_mention * qp.p_affirm;
      den += w * qp.p_mention;
    }
  }
  return den > 0.0 ? num / den : 0.0;
}

CatalogBundle default_catalog(const CatalogConfig& config) {
  if (config.diseases.size() < 2) throw ValidationError("catalog needs at least two diseases");
  for (int tier = 1; tier <= 3; ++tier) {
    const auto& c = config.counts[static_cast<size_t>(tier - 1)];
    if (c[0] < 0 || c[1] < 0 || c[0] + c[1] < 1) {
      throw ValidationError("catalog needs at least one question in tier " + std::to_string(tier));
    }
  }
  if (!(config.target_positive_ratio > 0.0 && config.target_positive_ratio < 1.0)) {
    throw ValidationError("target_positive_ratio must be in (0, 1)");
  }

  // Select bank entries per (tier, kind) in bank order, topping up with
  // synthetic questions when the bank runs out.
  std::vector<BankEntry> chosen;
  size_t synthetic = 0;
  for (int tier = 1; tier <= 3; ++tier) {
    for (AnswerKind kind : {AnswerKind::binary, AnswerKind::numeric}) {
      const int want = config.counts[static_cast<size_t>(tier - 1)][kind == AnswerKind::binary ? 0 : 1];
      int have = 0;
      for (const auto& e : bank()) {
        if (have == want) break;
        if (e.tier == tier && e.kind == kind) {
          chosen.push_back(e);
          ++have;
        }
      }
      while (have < want) {
        const std::string word = synthetic_word(synthetic++);
        const std::string id = "t" + std::to_string(tier) + "_" + word;
        if (kind == AnswerKind::binary) {
          chosen.push_back(binary(tier, id, "Is " + word + " present?", {word + " finding"}, {0.25, 0.25, 0.25}));
        } else {
          chosen.push_back(numeric(tier, id, "What is the " + word + " level?", {word + " level"}, {0.25, 0.25, 0.25},
                                   {{10.0, 10.0, 10.0}, 0.0, 2.0, 0.0, 1}));
        }
        ++have;
      }
    }
  }

  std::vector<ClinicalQuestion> questions;
  for (const auto& e : chosen) questions.push_back({e.id, e.text, e.tier, e.kind});
  CatalogBundle out{QuestionCatalog(std::move(questions)), {}};

  Rng rng(derive_seed(config.seed, "catalog"));
  auto has_disease = [&](const std::string& icd) {
    return std::any_of(config.diseases.begin(), config.diseases.end(),
                       [&](const DiseaseSpec& d) { return d.icd_code == icd; });
  };

  // Per-question base positive rate, then per-disease jitter on the logit scale.
  std::vector<double> base(chosen.size());
  for (auto& b : base) {
    b = std::clamp(rng.normal(config.target_positive_ratio, config.positive_ratio_sd), 0.05, 0.97);
  }

  struct FreeCell {
    size_t disease;
    size_t question;
    double logit;
  };
  std::vector<FreeCell> free_cells;
  for (size_t d = 0; d < config.diseases.size(); ++d) {
    const DiseaseSpec& spec = config.diseases[d];
    const int dom = domain_index(spec.domain);
    DiseaseProfile profile{spec.icd_code, spec.description, {}, {}};
    for (size_t q = 0; q < chosen.size(); ++q) {
      const BankEntry& e = chosen[q];
      const bool is_signature = e.signature == spec.icd_code;
      QuestionProfile qp;
      double m = e.mention[static_cast<size_t>(dom)];
      if (is_signature) m *= 1.2;
      qp.p_mention = std::clamp(m * rng.uniform(0.85, 1.15), 0.01, 0.95);
      if (e.kind == AnswerKind::binary) {
        const auto t = static_cast<size_t>(e.tier - 1);
        if (is_signature) {
          qp.p_affirm = config.signature_affirm[t];
        } else if (!e.signature.empty() && has_disease(e.signature)) {
          qp.p_affirm = rng.uniform(config.rival_affirm[t][0], config.rival_affirm[t][1]);
        } else {
          const double l = logit(base[q]) + rng.normal(0.0, 0.3);
          free_cells.push_back({d, q, l});
          qp.p_affirm = sigmoid(l);
        }
      } else {
        qp.numeric_mean = is_signature ? e.numeric.signature_mean
                                       : e.numeric.mean[static_cast<size_t>(dom)];
        qp.numeric_std = e.numeric.sd;
      }
      profile.questions.push_back(qp);
      profile.templates.push_back(make_templates(e.tier, e.kind, e.phrases, e.numeric.decimals));
    }
    out.profiles.push_back(std::move(profile));
  }

  // Shift the free cells on the logit scale until the population positive
  // ratio hits the target. The ratio is monotone in the shift.
  auto apply_shift = [&](double shift) {
    for (const auto& c : free_cells) {
      out.profiles[c.disease].questions[c.question].p_affirm =
          std::clamp(sigmoid(c.logit + shift), 0.02, 0.98);
    }
  };
  double lo = -6.0, hi = 6.0;
  for (int it = 0; it < 80 && !free_cells.empty(); ++it) {
    const double mid = 0.5 * (lo + hi);
    apply_shift(mid);
    if (expected_positive_ratio(out) < config.target_positive_ratio) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  apply_shift(0.5 * (lo + hi));
  return out;
}

}  // namespace icdlab
