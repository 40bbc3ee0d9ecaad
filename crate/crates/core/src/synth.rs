//! Seeded generator of labeled picture-description sentences with per-speaker
//! covariates and a planted group difference in repetition and coverage.
//!
//! Each sentence mentions one to four CIUs, realized from per-CIU surface
//! templates and joined by connective tokens, so the labels are recoverable
//! from the text by a dictionary built from the same templates.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::chat::{Group, LabeledSentence, SpeakerInfo};
use crate::ciu::{parse_ciu_name, CiuId, NUM_CIUS};
use crate::dictionary::CiuDictionary;
use crate::error::SynthError;

/// Sentence-level behavior of one diagnostic group.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(deny_unknown_fields))]
pub struct GroupProfile {
    /// Probability that a sentence opens with the CIU that closed the
    /// previous one.
    pub repetition_prob: f64,
    /// Each speaker draws a CIU pool of this many distinct units (inclusive range).
    pub pool_min: usize,
    pub pool_max: usize,
    /// Per-gap probability of a filler token.
    pub filler_rate: f64,
}

/// Clamped normal distribution, rounded to whole units.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(deny_unknown_fields))]
pub struct Covariate {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl Covariate {
    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let v = Normal::new(self.mean, self.sd).map(|d| d.sample(rng)).unwrap_or(self.mean);
        libm::round(v.clamp(self.min, self.max))
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default, deny_unknown_fields))]
pub struct TemplateSpec {
    pub seed: u64,
    /// CIU name to surface templates. A `{slot}` token expands to every
    /// alternative listed under `slots`.
    pub templates: BTreeMap<String, Vec<String>>,
    pub slots: BTreeMap<String, Vec<String>>,
    /// Sentence openers and between-mention connectives. Never part of a template.
    pub openers: Vec<String>,
    pub connectives: Vec<String>,
    pub fillers: Vec<String>,
    /// Preferred mention order; CIUs not listed follow in code order.
    pub narrative_order: Vec<String>,
    pub min_cius: usize,
    pub max_cius: usize,
    /// Probability that a sentence's mentions are shuffled instead of following
    /// the narrative order.
    pub order_noise: f64,
    pub impaired_fraction: f64,
    pub female_fraction: f64,
    pub control: GroupProfile,
    pub impaired: GroupProfile,
    pub age: Covariate,
    pub education: Covariate,
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl Default for TemplateSpec {
    fn default() -> Self {
        let templates: [(CiuId, &[&str]); NUM_CIUS] = [
            (CiuId::BOY, &["boy", "little boy", "son", "young lad"]),
            (CiuId::GIRL, &["girl", "little girl", "daughter", "sister"]),
            (CiuId::WOMAN, &["woman", "mother", "mom", "lady"]),
            (CiuId::KITCHEN, &["kitchen", "kitchen scene", "home interior"]),
            (CiuId::OUTSIDE, &["outside", "yard", "garden", "outdoors"]),
            (CiuId::COOKIE, &["cookie", "biscuit", "treats"]),
            (CiuId::JAR, &["jar", "cookie jar", "cookie tin"]),
            (CiuId::STOOL, &["stool", "step stool", "footstool"]),
            (CiuId::SINK, &["sink", "basin", "kitchen sink"]),
            (CiuId::PLATE, &["plate", "saucer"]),
            (CiuId::DISHCLOTH, &["dishcloth", "dish towel", "rag"]),
            (CiuId::WATER, &["water", "puddle"]),
            (CiuId::WINDOW, &["window", "windowpane"]),
            (CiuId::CUPBOARD, &["cupboard", "cabinet", "shelf"]),
            (CiuId::DISHES, &["dishes", "cups", "bowls"]),
            (CiuId::CURTAINS, &["curtains", "drapes"]),
            (CiuId::BOY_TAKING, &["{steal} cookies", "{steal} some cookies"]),
            (CiuId::BOY_OR_STOOL_FALLING, &["{fall}", "about to fall", "losing balance"]),
            (CiuId::WOMAN_DRYING, &["{dry} dishes", "{dry} plate", "doing dishes"]),
            (CiuId::WATER_OVERFLOWING, &["overflowing", "spilling over", "running over", "flooding"]),
            (CiuId::GIRL_ACTION, &["reaching up", "asking for one", "{hush}"]),
            (CiuId::WOMAN_UNCONCERNED, &["not noticing {flood}", "unaware of {flood}", "ignoring {flood}"]),
            (CiuId::WOMAN_INDIFFERENT, &["not watching {kids}", "ignoring {kids}", "paying no attention"]),
        ];
        let slots: [(&str, &[&str]); 6] = [
            ("steal", &["stealing", "taking", "swiping", "grabbing"]),
            ("fall", &["falling", "tipping over", "toppling"]),
            ("dry", &["drying", "washing", "wiping"]),
            ("hush", &["shushing", "giggling", "laughing"]),
            ("flood", &["water", "overflow", "spill"]),
            ("kids", &["kids", "children"]),
        ];
        let order = [
            CiuId::KITCHEN,
            CiuId::BOY,
            CiuId::STOOL,
            CiuId::BOY_OR_STOOL_FALLING,
            CiuId::CUPBOARD,
            CiuId::JAR,
            CiuId::COOKIE,
            CiuId::BOY_TAKING,
            CiuId::GIRL,
            CiuId::GIRL_ACTION,
            CiuId::WOMAN,
            CiuId::WOMAN_DRYING,
            CiuId::PLATE,
            CiuId::DISHCLOTH,
            CiuId::DISHES,
            CiuId::SINK,
            CiuId::WATER,
            CiuId::WATER_OVERFLOWING,
            CiuId::WOMAN_UNCONCERNED,
            CiuId::WOMAN_INDIFFERENT,
            CiuId::WINDOW,
            CiuId::CURTAINS,
            CiuId::OUTSIDE,
        ];
        TemplateSpec {
            seed: 7,
            templates: templates.iter().map(|(c, t)| (c.name().to_string(), strings(t))).collect(),
            slots: slots.iter().map(|(k, v)| (k.to_string(), strings(v))).collect(),
            openers: strings(&["there is", "i see", "the", "and the", "well there is", "so"]),
            connectives: strings(&["and", "and the", "then the", "with the", "while the", "and there is", "the"]),
            fillers: strings(&["um", "uh", "er", "hmm"]),
            narrative_order: order.iter().map(|c| c.name().to_string()).collect(),
            min_cius: 1,
            max_cius: 4,
            order_noise: 0.1,
            impaired_fraction: 0.4,
            female_fraction: 0.6,
            control: GroupProfile { repetition_prob: 0.05, pool_min: 16, pool_max: 23, filler_rate: 0.05 },
            impaired: GroupProfile { repetition_prob: 0.35, pool_min: 6, pool_max: 11, filler_rate: 0.15 },
            age: Covariate { mean: 70.0, sd: 8.0, min: 50.0, max: 95.0 },
            education: Covariate { mean: 15.0, sd: 3.0, min: 8.0, max: 22.0 },
        }
    }
}

/// The spec resolved to CIU ids and expanded token sequences.
struct Compiled {
    phrases: Vec<Vec<Vec<String>>>,
    /// First-template, first-alternative phrase per CIU.
    primary: Vec<Vec<String>>,
    rank: [usize; NUM_CIUS],
    openers: Vec<Vec<String>>,
    connectives: Vec<Vec<String>>,
    fillers: Vec<String>,
}

fn words(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

fn invalid(msg: impl Into<String>) -> SynthError {
    SynthError::InvalidSpec(msg.into())
}

fn check_prob(name: &str, p: f64) -> Result<(), SynthError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(invalid(format!("{name} = {p} is not a probability")))
    }
}

impl TemplateSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        self.compile().map(|_| ())
    }

    /// Dictionary covering every expanded template.
    pub fn complete_dictionary(&self) -> Result<CiuDictionary, SynthError> {
        let c = self.compile()?;
        let mut dict = CiuDictionary::new();
        for (code, phrases) in c.phrases.iter().enumerate() {
            for p in phrases {
                dict.insert(p, &[CiuId::from_code(code).unwrap()]);
            }
        }
        Ok(dict)
    }

    /// Dictionary with only one surface form per CIU, the first template
    /// with each slot at its first alternative.
    pub fn impoverished_dictionary(&self) -> Result<CiuDictionary, SynthError> {
        let c = self.compile()?;
        let mut dict = CiuDictionary::new();
        for (code, p) in c.primary.iter().enumerate() {
            dict.insert(p, &[CiuId::from_code(code).unwrap()]);
        }
        Ok(dict)
    }

    fn expand(&self, template: &str) -> Result<Vec<Vec<String>>, SynthError> {
        let mut out: Vec<Vec<String>> = alloc::vec![Vec::new()];
        for tok in template.split_whitespace() {
            let alternatives: Vec<Vec<String>> = match tok.strip_prefix('{').and_then(|t| t.strip_suffix('}')) {
                Some(slot) => {
                    let alts = self.slots.get(slot).ok_or_else(|| invalid(format!("unknown slot `{slot}`")))?;
                    if alts.is_empty() {
                        return Err(invalid(format!("slot `{slot}` has no alternatives")));
                    }
                    alts.iter().map(|a| words(a)).collect()
                }
                None => alloc::vec![words(tok)],
            };
            out = out
                .iter()
                .flat_map(|prefix| {
                    alternatives.iter().map(move |alt| {
                        let mut p = prefix.clone();
                        p.extend(alt.iter().cloned());
                        p
                    })
                })
                .collect();
        }
        if out.iter().any(Vec::is_empty) {
            return Err(invalid(format!("template `{template}` realizes to nothing")));
        }
        Ok(out)
    }

    fn compile(&self) -> Result<Compiled, SynthError> {
        for (name, p) in [
            ("order_noise", self.order_noise),
            ("impaired_fraction", self.impaired_fraction),
            ("female_fraction", self.female_fraction),
            ("control.repetition_prob", self.control.repetition_prob),
            ("control.filler_rate", self.control.filler_rate),
            ("impaired.repetition_prob", self.impaired.repetition_prob),
            ("impaired.filler_rate", self.impaired.filler_rate),
        ] {
            check_prob(name, p)?;
        }
        if self.min_cius == 0 || self.max_cius < self.min_cius {
            return Err(invalid(format!("CIUs per sentence range {}..={} is empty", self.min_cius, self.max_cius)));
        }
        for (name, g) in [("control", &self.control), ("impaired", &self.impaired)] {
            if g.pool_min < 2 || g.pool_max < g.pool_min || g.pool_max > NUM_CIUS {
                return Err(invalid(format!("{name} pool range {}..={} must lie within 2..={NUM_CIUS}", g.pool_min, g.pool_max)));
            }
        }
        for (name, c) in [("age", &self.age), ("education", &self.education)] {
            if !(c.sd >= 0.0 && c.min <= c.max && c.mean.is_finite()) {
                return Err(invalid(format!("{name} distribution is malformed")));
            }
        }
        if self.connectives.is_empty() {
            return Err(invalid("at least one connective is needed to separate mentions"));
        }

        let mut phrases: Vec<Vec<Vec<String>>> = alloc::vec![Vec::new(); NUM_CIUS];
        let mut primary: Vec<Vec<String>> = alloc::vec![Vec::new(); NUM_CIUS];
        for (name, templates) in &self.templates {
            let ciu = parse_ciu_name(name).map_err(|e| invalid(e.to_string()))?;
            if templates.len() < 2 {
                return Err(invalid(format!("`{ciu}` needs at least two templates")));
            }
            for (i, t) in templates.iter().enumerate() {
                let expanded = self.expand(t)?;
                if i == 0 {
                    primary[ciu.code()] = expanded[0].clone();
                }
                phrases[ciu.code()].extend(expanded);
            }
        }
        if let Some(missing) = (0..NUM_CIUS).find(|&c| phrases[c].is_empty()) {
            return Err(invalid(format!("no templates for `{}`", CiuId::from_code(missing).unwrap())));
        }

        let glue: Vec<Vec<String>> = self.openers.iter().chain(&self.connectives).map(|s| words(s)).collect();
        let reserved: BTreeSet<&str> = glue.iter().flatten().map(String::as_str).chain(self.fillers.iter().map(String::as_str)).collect();
        let mut owner: BTreeMap<&[String], usize> = BTreeMap::new();
        for (code, list) in phrases.iter().enumerate() {
            for p in list {
                if let Some(tok) = p.iter().find(|t| reserved.contains(t.as_str())) {
                    return Err(invalid(format!("template token `{tok}` is also a connective or filler")));
                }
                if let Some(&other) = owner.get(p.as_slice()).filter(|&&o| o != code) {
                    return Err(invalid(format!(
                        "phrase `{}` realizes both `{}` and `{}`",
                        p.join(" "),
                        CiuId::from_code(other).unwrap(),
                        CiuId::from_code(code).unwrap()
                    )));
                }
                owner.insert(p, code);
            }
        }
        if let Some(f) = self.fillers.iter().find(|f| f.split_whitespace().count() != 1) {
            return Err(invalid(format!("filler `{f}` must be a single token")));
        }

        let mut rank = [usize::MAX; NUM_CIUS];
        for (i, name) in self.narrative_order.iter().enumerate() {
            let ciu = parse_ciu_name(name).map_err(|e| invalid(e.to_string()))?;
            if rank[ciu.code()] != usize::MAX {
                return Err(invalid(format!("`{ciu}` repeated in narrative order")));
            }
            rank[ciu.code()] = i;
        }
        let listed = self.narrative_order.len();
        for (code, r) in rank.iter_mut().enumerate() {
            if *r == usize::MAX {
                *r = listed + code;
            }
        }

        for p in &mut phrases {
            p.sort();
            p.dedup();
        }
        Ok(Compiled {
            phrases,
            primary,
            rank,
            openers: self.openers.iter().map(|s| words(s)).filter(|w| !w.is_empty()).collect(),
            connectives: self.connectives.iter().map(|s| words(s)).filter(|w| !w.is_empty()).collect(),
            fillers: self.fillers.iter().map(|s| s.trim().to_lowercase()).collect(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthCorpus {
    /// Grouped by speaker, in speaker order.
    pub sentences: Vec<LabeledSentence>,
    pub speakers: Vec<SpeakerInfo>,
}

/// Generates `n_speakers × sentences_per_speaker` labeled sentences. Each
/// speaker draws from its own random stream, so adding speakers leaves
/// earlier ones unchanged.
pub fn generate_corpus(spec: &TemplateSpec, n_speakers: usize, sentences_per_speaker: usize) -> Result<SynthCorpus, SynthError> {
    let compiled = spec.compile()?;
    let width = n_speakers.saturating_sub(1).to_string().len().max(3);
    let mut corpus = SynthCorpus { sentences: Vec::new(), speakers: Vec::new() };
    for s in 0..n_speakers {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(s as u64);
        let speaker_id = format!("syn{s:0width$}");
        let group = if rng.random_bool(spec.impaired_fraction) { Group::Impaired } else { Group::Control };
        let profile = match group {
            Group::Control => &spec.control,
            Group::Impaired => &spec.impaired,
        };
        corpus.speakers.push(SpeakerInfo {
            speaker_id: speaker_id.clone(),
            age: spec.age.sample(&mut rng),
            gender: u8::from(rng.random_bool(spec.female_fraction)),
            education: spec.education.sample(&mut rng),
            group,
        });

        let mut pool: Vec<CiuId> = CiuId::all().collect();
        pool.shuffle(&mut rng);
        pool.truncate(rng.random_range(profile.pool_min..=profile.pool_max));

        let mut previous_last: Option<CiuId> = None;
        for _ in 0..sentences_per_speaker {
            let labels = sentence_cius(spec, &compiled, profile, &pool, previous_last, &mut rng);
            previous_last = labels.last().copied();
            let tokens = realize(&compiled, profile, &labels, &mut rng);
            corpus.sentences.push(LabeledSentence { speaker_id: speaker_id.clone(), tokens, labels });
        }
    }
    Ok(corpus)
}

fn sentence_cius(
    spec: &TemplateSpec,
    c: &Compiled,
    profile: &GroupProfile,
    pool: &[CiuId],
    previous_last: Option<CiuId>,
    rng: &mut ChaCha8Rng,
) -> Vec<CiuId> {
    let repeat = previous_last.filter(|_| rng.random_bool(profile.repetition_prob));
    // Without a planned repetition the previous closing CIU is excluded, so
    // adjacent duplicates only arise from `repetition_prob`.
    let available: Vec<CiuId> = pool.iter().copied().filter(|&x| Some(x) != previous_last).collect();
    let k = rng.random_range(spec.min_cius..=spec.max_cius).min(available.len() + usize::from(repeat.is_some()));
    let mut rest: Vec<CiuId> = available.choose_multiple(rng, k - usize::from(repeat.is_some())).copied().collect();
    if rng.random_bool(spec.order_noise) {
        rest.shuffle(rng);
    } else {
        rest.sort_by_key(|x| c.rank[x.code()]);
    }
    repeat.into_iter().chain(rest).collect()
}

fn realize(c: &Compiled, profile: &GroupProfile, labels: &[CiuId], rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut tokens = Vec::new();
    let maybe_filler = |tokens: &mut Vec<String>, rng: &mut ChaCha8Rng| {
        if !c.fillers.is_empty() && rng.random_bool(profile.filler_rate) {
            tokens.push(c.fillers.choose(rng).unwrap().clone());
        }
    };
    if let Some(opener) = c.openers.choose(rng) {
        tokens.extend(opener.iter().cloned());
    }
    for (i, ciu) in labels.iter().enumerate() {
        maybe_filler(&mut tokens, rng);
        if i > 0 {
            tokens.extend(c.connectives.choose(rng).unwrap().iter().cloned());
        }
        tokens.extend(c.phrases[ciu.code()].choose(rng).unwrap().iter().cloned());
    }
    maybe_filler(&mut tokens, rng);
    tokens
}
