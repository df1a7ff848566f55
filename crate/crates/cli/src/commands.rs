use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use latmat_core::annio::{AnnotationFile, ClassMap};
use latmat_core::matchagree::{self, ConfusionMatrix, IMAGE_HEIGHT, IMAGE_WIDTH};
use latmat_core::maturity::{class_probs, ThresholdSchedule};
use latmat_core::noise::{flip_counts, flip_log_csv, inject_noise, NoiseSpec};
use latmat_core::specfun::{self, ShapePair};
use latmat_core::toytrain::{run_noise_experiment, TrainConfig};
use latmat_core::{detmetrics, Error};
use serde_json::json;

use crate::{
    AgreeArgs, BetaArgs, Cli, ClassOrderArg, Command, CutsArg, EvalArgs, Format, NoisifyArgs, SimulateArgs,
    SplitArgs, TrainToyArgs, EXIT_INPUT, EXIT_RUNTIME,
};

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Divergence { .. } => EXIT_RUNTIME,
            _ => EXIT_INPUT,
        };
        Failure { code, message: e.to_string() }
    }
}

type Outcome = Result<String, Failure>;

pub fn run(cli: &Cli) -> Outcome {
    let f = cli.format;
    match &cli.command {
        Command::Beta(a) => beta(a, f),
        Command::Agree(a) => agree(a, f),
        Command::Noisify(a) => noisify(a, f),
        Command::Eval(a) => eval(a, f),
        Command::TrainToy(a) => train_toy(a, f),
        Command::Simulate(a) => simulate(a, f),
        Command::Split(a) => split(a, f),
    }
}

fn json_out(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn schedule(arg: &CutsArg) -> Result<ThresholdSchedule, Failure> {
    Ok(match &arg.cuts {
        Some(c) => ThresholdSchedule::from_interior(c)?,
        None => ThresholdSchedule::default(),
    })
}

fn class_map(file: &AnnotationFile, arg: &ClassOrderArg) -> Result<ClassMap, Failure> {
    Ok(match &arg.class_order {
        Some(ids) => ClassMap::explicit(ids.clone())?,
        None => file.class_map(),
    })
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Failure {
            code: EXIT_RUNTIME,
            message: format!("cannot create {}: {e}", dir.display()),
        })?;
    }
    std::fs::write(path, bytes).map_err(|e| Failure {
        code: EXIT_RUNTIME,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "annotations".into(), |s| s.to_string_lossy().into_owned())
}

fn beta(a: &BetaArgs, format: Format) -> Outcome {
    let shape = ShapePair::new(a.alpha, a.beta)?;
    let t = schedule(&a.cuts)?;
    let probs = class_probs(shape, &t)?;
    let mut points = Vec::with_capacity(a.x.len());
    for &x in &a.x {
        let cdf = specfun::reg_inc_beta(x, shape)?;
        let density = if x > 0.0 && x < 1.0 { Some(specfun::beta_density(x, shape)?) } else { None };
        points.push((x, density, cdf));
    }
    let predicted = probs.argmax();
    let cuts = t.cuts();
    Ok(match format {
        Format::Json => json_out(&json!({
            "alpha": a.alpha,
            "beta": a.beta,
            "mean": shape.mean(),
            "cuts": cuts,
            "probs": probs.as_slice(),
            "predicted_class": predicted,
            "points": points.iter().map(|(x, d, c)| json!({"x": x, "density": d, "cdf": c})).collect::<Vec<_>>(),
        })),
        Format::Csv => {
            let mut s = String::from("class,lower,upper,probability\n");
            for (k, p) in probs.as_slice().iter().enumerate() {
                let _ = writeln!(s, "{},{},{},{}", k + 1, cuts[k], cuts[k + 1], p);
            }
            if !points.is_empty() {
                s.push_str("\nx,density,cdf\n");
                for (x, d, c) in &points {
                    let _ = writeln!(s, "{x},{},{c}", d.map_or(String::new(), |v| v.to_string()));
                }
            }
            s
        }
        Format::Text => {
            let mut s = format!("Beta(alpha = {}, beta = {}), mean {:.6}\n", a.alpha, a.beta, shape.mean());
            for (k, p) in probs.as_slice().iter().enumerate() {
                let _ = writeln!(s, "class {}  [{:.4}, {:.4})  p = {:.6}", k + 1, cuts[k], cuts[k + 1], p);
            }
            let _ = writeln!(s, "predicted class {predicted}");
            for (x, d, c) in &points {
                let d = d.map_or("-".to_string(), |v| format!("{v:.6}"));
                let _ = writeln!(s, "x = {x:.4}  density = {d}  cdf = {c:.6}");
            }
            s
        }
    })
}

fn confusion_report(
    reference: &latmat_core::AnnotationSet,
    target: &latmat_core::AnnotationSet,
    iou: f64,
) -> Result<(ConfusionMatrix, usize, usize, usize), Failure> {
    let m = matchagree::match_sets(reference, target, iou)?;
    let cm = matchagree::confusion(&m, reference, target)?;
    Ok((cm, m.num_pairs(), m.num_unmatched_a(), m.num_unmatched_b()))
}

fn agree(a: &AgreeArgs, format: Format) -> Outcome {
    let rf = AnnotationFile::read(&a.reference)?;
    let tf = AnnotationFile::read(&a.target)?;
    let map = class_map(&rf, &a.class_order)?;
    let reference = rf.to_annotation_set(stem(&a.reference), &map)?;
    let target = tf.to_annotation_set(stem(&a.target), &map)?;
    let shared = reference.images.iter().filter(|i| target.image(i.image_id).is_some()).count();
    if shared == 0 {
        eprintln!("warning: the two files share no image ids; nothing can be matched");
    }
    let (cm, pairs, un_ref, un_tgt) = confusion_report(&reference, &target, a.iou)?;
    if pairs == 0 {
        eprintln!("warning: no pairs reached IoU {}", a.iou);
    }
    Ok(match format {
        Format::Json => json_out(&json!({
            "reference": reference.source_name,
            "target": target.source_name,
            "iou_threshold": a.iou,
            "matched_pairs": pairs,
            "unmatched_reference": un_ref,
            "unmatched_target": un_tgt,
            "confusion": cm,
        })),
        Format::Csv => cm.to_csv(),
        Format::Text => format!(
            "{}matched pairs: {pairs}, unmatched reference: {un_ref}, unmatched target: {un_tgt}\n",
            cm.to_table(&reference.source_name, &target.source_name)
        ),
    })
}

fn noisify(a: &NoisifyArgs, format: Format) -> Outcome {
    let file = AnnotationFile::read(&a.input)?;
    let map = class_map(&file, &a.class_order)?;
    let set = file.to_annotation_set(stem(&a.input), &map)?;
    let spec = NoiseSpec::new(a.rate, a.seed)?.per_class(a.per_class);
    let (noisy, flips) = inject_noise(&set, &spec)?;
    let out_file = file.with_labels(&noisy, &map)?;

    let output = a
        .output
        .clone()
        .unwrap_or_else(|| a.out_dir.out_dir.join(format!("{}.noisy.json", stem(&a.input))));
    let log = a
        .flip_log
        .clone()
        .unwrap_or_else(|| output.with_file_name(format!("{}.flips.csv", stem(&output))));
    write_bytes(&output, &out_file.serialize())?;
    write_bytes(&log, flip_log_csv(&flips).as_bytes())?;

    let k = map.num_classes();
    let counts = flip_counts(&flips, k);
    Ok(match format {
        Format::Json => json_out(&json!({
            "input": a.input,
            "output": output,
            "flip_log": log,
            "instances": set.len(),
            "flips": flips.len(),
            "rate": a.rate,
            "seed": a.seed,
            "flip_counts": counts,
        })),
        Format::Csv => {
            let mut s = String::from("old_label,new_label,count\n");
            for (i, row) in counts.iter().enumerate() {
                for (j, c) in row.iter().enumerate().filter(|(_, c)| **c > 0) {
                    let _ = writeln!(s, "{},{},{c}", i + 1, j + 1);
                }
            }
            s
        }
        Format::Text => format!(
            "flipped {} of {} labels (rate {}, seed {})\nwrote {}\nwrote {}\n",
            flips.len(),
            set.len(),
            a.rate,
            a.seed,
            output.display(),
            log.display()
        ),
    })
}

fn eval(a: &EvalArgs, format: Format) -> Outcome {
    let gf = AnnotationFile::read(&a.ground_truth)?;
    let df = AnnotationFile::read(&a.detections)?;
    let map = class_map(&gf, &a.class_order)?;
    let gts = gf.to_annotation_set(stem(&a.ground_truth), &map)?;
    let dets = df.detections(&map)?;
    let r = detmetrics::evaluate(&dets, &gts)?;
    Ok(match format {
        Format::Json => json_out(&r),
        Format::Csv => {
            let mut s = String::from("class,name,num_gt,num_dets,ap50,ap75,ap50_95,ar100\n");
            for c in &r.per_class {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    c.class,
                    c.name,
                    c.num_gt,
                    c.num_dets,
                    c.ap[0],
                    c.ap[5],
                    c.ap.iter().sum::<f64>() / c.ap.len() as f64,
                    c.recall.iter().sum::<f64>() / c.recall.len() as f64
                );
            }
            let _ = writeln!(s, "all,all,,,{},{},{},{}", r.map50, r.map_at(0.75).unwrap_or(0.0), r.map50_95, r.ar100);
            s
        }
        Format::Text => r.to_table(),
    })
}

fn train_config(a: &TrainToyArgs) -> Result<TrainConfig, Failure> {
    let mut cfg = match &a.config {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|e| Failure {
                code: EXIT_INPUT,
                message: format!("cannot read {}: {e}", path.display()),
            })?;
            serde_json::from_slice(&bytes).map_err(|e| Failure {
                code: EXIT_INPUT,
                message: format!("{}: {e}", path.display()),
            })?
        }
        None => TrainConfig::default(),
    };
    cfg.seed = a.seed;
    macro_rules! set {
        ($($field:ident = $arg:expr),*) => { $(if let Some(v) = $arg.clone() { cfg.$field = v; })* };
    }
    set!(
        epochs = a.epochs,
        batch_size = a.batch_size,
        learning_rate = a.learning_rate,
        hidden_dims = a.hidden,
        gamma = a.gamma,
        lambda_weight = a.lambda,
        feature_noise_sigma = a.feature_noise,
        distractors = a.distractors,
        n_train = a.n_train,
        n_val = a.n_val,
        n_test = a.n_test
    );
    if a.cuts.cuts.is_some() {
        cfg.thresholds = schedule(&a.cuts)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn train_toy(a: &TrainToyArgs, format: Format) -> Outcome {
    let cfg = train_config(a)?;
    let report = run_noise_experiment(&cfg, a.noise_rate, a.seeds)?;
    if let Some(path) = &a.output {
        write_bytes(path, json_out(&report).as_bytes())?;
    }
    Ok(match format {
        Format::Json => json_out(&report),
        Format::Csv => {
            let mut s = String::from("head,seed,flips,clean_accuracy,noisy_accuracy,drop\n");
            for h in [&report.beta, &report.softmax] {
                let name = serde_json::to_value(h.head).expect("serializable");
                for r in &h.runs {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{}",
                        name.as_str().unwrap_or_default(),
                        r.seed,
                        r.flips,
                        r.clean_accuracy,
                        r.noisy_accuracy,
                        r.drop()
                    );
                }
            }
            s
        }
        Format::Text => report.to_table(),
    })
}

fn simulate(a: &SimulateArgs, format: Format) -> Outcome {
    let t = schedule(&a.cuts)?;
    let sim = matchagree::simulate_annotators(a.n_fruits, &t, a.jitter, a.seed)?;
    let dir = &a.out_dir.out_dir;
    let names = ["baseline.json", "annotator_a.json", "annotator_b.json"];
    let mut written: Vec<PathBuf> = Vec::new();
    for (set, name) in sim.sets().into_iter().zip(names) {
        let path = dir.join(name);
        write_bytes(&path, &AnnotationFile::from_annotation_set(set, IMAGE_WIDTH, IMAGE_HEIGHT).serialize())?;
        written.push(path);
    }
    let report = matchagree::three_way_agreement(&sim.baseline, &sim.annotator_a, &sim.annotator_b, a.iou)?;
    let comparisons = [
        ("Baseline", "Annotator A", &report.reference_vs_a),
        ("Baseline", "Annotator B", &report.reference_vs_b),
        ("Annotator A", "Annotator B", &report.a_vs_b),
    ];
    Ok(match format {
        Format::Json => json_out(&json!({
            "seed": a.seed,
            "n_fruits": a.n_fruits,
            "jitter": a.jitter,
            "files": written,
            "agreement": report,
        })),
        Format::Csv => {
            let mut s = String::new();
            for (i, (r, c, cm)) in comparisons.iter().enumerate() {
                for (j, line) in cm.to_csv().lines().enumerate() {
                    if j == 0 && i == 0 {
                        let _ = writeln!(s, "comparison,{line}");
                    } else if j > 0 {
                        let _ = writeln!(s, "{r} vs {c},{line}");
                    }
                }
            }
            s
        }
        Format::Text => {
            let mut s = String::new();
            for (r, c, cm) in comparisons {
                s.push_str(&cm.to_table(r, c));
                s.push('\n');
            }
            for p in &written {
                let _ = writeln!(s, "wrote {}", p.display());
            }
            s
        }
    })
}

fn split(a: &SplitArgs, format: Format) -> Outcome {
    let file = AnnotationFile::read(&a.input)?;
    let (first, second) = file.split_images(a.fraction, a.seed)?;
    let dir = &a.out_dir.out_dir;
    let p1 = a.first.clone().unwrap_or_else(|| dir.join(format!("{}.part1.json", stem(&a.input))));
    let p2 = a.second.clone().unwrap_or_else(|| dir.join(format!("{}.part2.json", stem(&a.input))));
    write_bytes(&p1, &first.serialize())?;
    write_bytes(&p2, &second.serialize())?;
    Ok(match format {
        Format::Json => json_out(&json!({
            "first": {"path": p1, "images": first.images.len(), "annotations": first.annotations.len()},
            "second": {"path": p2, "images": second.images.len(), "annotations": second.annotations.len()},
        })),
        Format::Csv => format!(
            "part,path,images,annotations\n1,{},{},{}\n2,{},{},{}\n",
            p1.display(),
            first.images.len(),
            first.annotations.len(),
            p2.display(),
            second.images.len(),
            second.annotations.len()
        ),
        Format::Text => format!(
            "{}: {} images, {} annotations\n{}: {} images, {} annotations\n",
            p1.display(),
            first.images.len(),
            first.annotations.len(),
            p2.display(),
            second.images.len(),
            second.annotations.len()
        ),
    })
}
