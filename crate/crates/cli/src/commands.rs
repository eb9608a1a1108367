use std::path::Path;

use anyhow::{bail, Context, Result};
use locepi::breeding::{
    cross_many, jannink_index, preference_index, region_densities, write_cross_samples, write_crosses,
    write_selection, CrossMode, SelectionInput, ASSORTMENT_NOTE,
};
use locepi::combine::{
    assemble_design, fit_lasso, importance_scores, lambda_path, load_model, predict_combined, save_model,
    write_importance, CombinedModel,
};
use locepi::genome::{load_marker_panel, load_phenotype, partition_genome, MarkerPanel, Phenotype, Region, RegionTree};
use locepi::hierarchy::{
    hierarchical_scan, threshold_scan, write_hierarchy_csv, write_hierarchy_tree, Decision, HierarchyReport,
    ScanSettings,
};
use locepi::kernel::{kernel_scan, KernelWeights, WeightMethod};
use locepi::pipeline::{eblup_matrix, fit_regions, predict_eblups, RegionFit};
use locepi::sim::{simulate_population, write_simulation};
use locepi::spmm::{fit_single, write_eblups, write_fit_report, MixedModelSpec, Structure};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::config::{ProcedureName, RunConfig};

/// Files written and notes for the manifest.
#[derive(Debug, Default)]
pub struct Outcome {
    pub outputs: Vec<String>,
    pub notes: Vec<String>,
}

impl Outcome {
    fn file(&mut self, name: &str) -> String {
        self.outputs.push(name.to_string());
        name.to_string()
    }
}

fn load_data(cfg: &RunConfig) -> Result<(MarkerPanel, Phenotype)> {
    cfg.require_inputs(true)?;
    let panel = load_marker_panel(&cfg.data.markers, &cfg.data.map, cfg.data.coding)?;
    let phenotype = load_phenotype(&cfg.data.phenotype, &panel)?;
    Ok((panel, phenotype))
}

fn tree(cfg: &RunConfig, panel: &MarkerPanel) -> Result<RegionTree> {
    Ok(partition_genome(panel, cfg.partition.levels, cfg.partition.splits)?)
}

fn fit_nodes(cfg: &RunConfig, panel: &MarkerPanel, phenotype: &Phenotype, nodes: &[&RegionTree]) -> Result<Vec<RegionFit>> {
    let pcs = if cfg.fit.pc_count > 0 {
        Some(panel.principal_components(cfg.fit.pc_count)?)
    } else {
        None
    };
    let regions: Vec<Region> = nodes.iter().map(|n| n.region.clone()).collect();
    Ok(fit_regions(
        panel,
        phenotype,
        &regions,
        cfg.kernel.function(),
        cfg.fit.structure,
        cfg.fit.method,
        pcs.as_ref(),
    )?)
}

fn settings(cfg: &RunConfig) -> ScanSettings {
    ScanSettings {
        function: cfg.kernel.function(),
        method: cfg.fit.method,
        marginal: cfg.test.marginal,
    }
}

fn run_test(cfg: &RunConfig, tree: &RegionTree, panel: &MarkerPanel, phenotype: &Phenotype) -> Result<HierarchyReport> {
    Ok(match cfg.test.procedure {
        ProcedureName::Meinshausen => hierarchical_scan(tree, panel, phenotype, cfg.test.alpha, &settings(cfg))?,
        ProcedureName::Threshold => threshold_scan(tree, panel, phenotype, cfg.test.h2_floor, &settings(cfg))?,
    })
}

pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let mut sim = cfg.simulate.clone();
    sim.seed = cfg.seed;
    let (panel, phenotype, truth) = simulate_population(&sim)?;
    write_simulation(out, &panel, &phenotype, &truth)?;
    let mut o = Outcome::default();
    for f in ["markers.csv", "map.csv", "phenotype.csv", "truth.csv"] {
        o.file(f);
    }
    o.notes.push(format!("realized_h2 = {}", truth.realized_h2));
    Ok(o)
}

pub fn fit(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let (panel, phenotype) = load_data(cfg)?;
    let tree = tree(cfg, &panel)?;
    let nodes = tree.nodes();
    let fits = fit_nodes(cfg, &panel, &phenotype, &nodes)?;
    let mut o = Outcome::default();

    let sections: Vec<(String, _)> = if cfg.fit.structure == Structure::Joint {
        vec![("joint".to_string(), fits[0].fit.clone())]
    } else {
        fits.iter().map(|f| (f.region.id.clone(), f.fit.clone())).collect()
    };
    write_fit_report(out.join(o.file("fit_report.txt")), &sections)?;
    let ids: Vec<String> = fits.iter().map(|f| f.region.id.clone()).collect();
    write_eblups(out.join(o.file("eblups.csv")), panel.line_ids(), &ids, &eblup_matrix(&fits))?;

    let h2: Vec<f64> = fits.iter().map(|f| f.h2()).collect();
    let weights = match KernelWeights::from_scores(&h2, WeightMethod::Heritability) {
        Ok(w) => w.weights().to_vec(),
        Err(_) => {
            log::warn!("every region heritability is zero; weights are undefined");
            o.notes.push("no genetic signal: weights left empty".into());
            vec![f64::NAN; h2.len()]
        }
    };
    let mut text = String::from("region_id,level,n_markers,h2,weight\n");
    for ((f, node), w) in fits.iter().zip(&nodes).zip(&weights) {
        let w = if w.is_nan() { String::new() } else { w.to_string() };
        text.push_str(&format!("{},{},{},{},{}\n", f.region.id, node.level, f.region.len(), f.h2(), w));
    }
    write(out, &o.file("weights.csv"), &text)?;
    Ok(o)
}

pub fn scan(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let (panel, phenotype) = load_data(cfg)?;
    let centers: Vec<usize> = panel.mapped_columns().into_iter().step_by(cfg.scan.stride).collect();
    let function = cfg.kernel.function();
    let method = cfg.fit.method;
    let h2: Vec<f64> = centers
        .par_iter()
        .map(|&c| -> Result<f64> {
            let k = kernel_scan(&panel, c, cfg.scan.bandwidth, function)?;
            let spec = MixedModelSpec::new(&phenotype, vec![&k])?;
            Ok(fit_single(&spec, method)?.heritabilities[0])
        })
        .collect::<Result<_>>()?;
    let mut text = String::from("chromosome,cM,marker_id,local_h2\n");
    for (&c, h) in centers.iter().zip(&h2) {
        let e = panel.map().entry(c);
        text.push_str(&format!("{},{},{},{}\n", e.chromosome, e.position, e.marker_id, h));
    }
    let mut o = Outcome::default();
    write(out, &o.file("scan.csv"), &text)?;
    Ok(o)
}

pub fn test(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let (panel, phenotype) = load_data(cfg)?;
    let tree = tree(cfg, &panel)?;
    let report = run_test(cfg, &tree, &panel, &phenotype)?;
    let mut o = Outcome::default();
    write_hierarchy_csv(out.join(o.file("hierarchy.csv")), &report)?;
    write_hierarchy_tree(out.join(o.file("hierarchy_tree.json")), &tree, &report)?;
    let rejected: Vec<&str> = report.rejected().map(|n| n.region_id.as_str()).collect();
    o.notes.push(format!("rejected = {}", rejected.join(",")));
    Ok(o)
}

/// Phenotype per line, covariates per line (identity incidence only).
fn line_response(phenotype: &Phenotype) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if phenotype.is_identity_incidence() {
        return Ok((phenotype.values().clone(), phenotype.covariates().clone()));
    }
    let means = phenotype.line_means();
    if means.iter().any(|m| m.is_none()) {
        bail!("combining EBLUPs needs a phenotype record for every line");
    }
    let y = DVector::from_iterator(means.len(), means.into_iter().map(|m| m.unwrap_or(0.0)));
    let n = y.len();
    Ok((y, DMatrix::zeros(n, 0)))
}

struct Combined {
    fits: Vec<RegionFit>,
    model: CombinedModel,
    path: Option<locepi::combine::PathReport>,
}

fn combined(cfg: &RunConfig, panel: &MarkerPanel, phenotype: &Phenotype, o: &mut Outcome) -> Result<Combined> {
    let tree = tree(cfg, panel)?;
    let mut nodes = tree.nodes();
    if cfg.combine.significant_only {
        let report = run_test(cfg, &tree, panel, phenotype)?;
        nodes.retain(|n| report.node(&n.region.id).map(|r| r.decision) == Some(Decision::Rejected));
        if nodes.is_empty() {
            log::warn!("no region is significant; using the whole genome");
            o.notes.push("no significant region; whole genome used".into());
            nodes.push(&tree);
        }
    }
    let fits = fit_nodes(cfg, panel, phenotype, &nodes)?;
    let (y, fixed) = line_response(phenotype)?;
    let ids: Vec<String> = nodes.iter().map(|n| n.region.id.clone()).collect();
    let levels: Vec<usize> = nodes.iter().map(|n| n.level).collect();
    let bundle = assemble_design(&eblup_matrix(&fits), &ids, &levels, &fixed)?;
    let (model, path) = if let Some(p) = &cfg.predict.model {
        (load_model(p)?, None)
    } else if let Some(l1) = cfg.combine.lambda1 {
        (fit_lasso(&bundle, &y, l1, cfg.combine.lambda2)?, None)
    } else {
        let path = lambda_path(&bundle, &y, cfg.combine.n_lambda, cfg.combine.folds, cfg.combine.lambda2, cfg.seed)?;
        (path.model.clone(), Some(path))
    };
    if model.input_columns != fits.len() {
        bail!(
            "the model expects {} EBLUP columns but {} regions were fitted",
            model.input_columns,
            fits.len()
        );
    }
    Ok(Combined { fits, model, path })
}

pub fn combine(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let (panel, phenotype) = load_data(cfg)?;
    let mut o = Outcome::default();
    let c = combined(cfg, &panel, &phenotype, &mut o)?;
    save_model(out.join(o.file("model.toml")), &c.model)?;
    if let Some(path) = &c.path {
        let mut text = String::from("lambda1,cv_error,n_active,chosen\n");
        for (i, l) in path.lambdas.iter().enumerate() {
            let active = path.coefficients[i].iter().filter(|a| **a != 0.0).count();
            text.push_str(&format!("{},{},{},{}\n", l, path.cv_error[i], active, i == path.chosen));
        }
        write(out, &o.file("lasso_path.csv"), &text)?;
    }
    write_importance(out.join(o.file("importance.csv")), &importance_scores(std::slice::from_ref(&c.model)))?;
    let (_, fixed) = line_response(&phenotype)?;
    let (full, genotypic) = predict_combined(&c.model, &eblup_matrix(&c.fits), &fixed)?;
    let mut text = String::from("line_id,prediction,genotypic\n");
    for (i, id) in panel.line_ids().iter().enumerate() {
        text.push_str(&format!("{},{},{}\n", id, full[i], genotypic[i]));
    }
    write(out, &o.file("fitted.csv"), &text)?;
    o.notes.push(format!("lambda1 = {}", c.model.lambda1));
    o.notes.push(format!("active regions = {}", c.model.active_set.len()));
    Ok(o)
}

pub fn predict(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let new_path = cfg
        .predict
        .markers
        .as_ref()
        .context("predict needs predict.markers, the marker file of the new lines")?;
    if !new_path.is_file() {
        bail!("input file {} does not exist", new_path.display());
    }
    let (panel, phenotype) = load_data(cfg)?;
    let new_panel = load_marker_panel(new_path, &cfg.data.map, cfg.data.coding)?;
    let same = new_panel.n_markers() == panel.n_markers()
        && (0..panel.n_markers()).all(|j| new_panel.marker_id(j) == panel.marker_id(j));
    if !same {
        bail!("new lines must be genotyped for exactly the training markers");
    }
    let mut o = Outcome::default();
    let c = combined(cfg, &panel, &phenotype, &mut o)?;
    if !c.model.beta.is_empty() {
        bail!("the combined model uses covariates, which new lines do not provide");
    }
    let g_new = predict_eblups(&c.fits, panel.markers(), new_panel.markers())?;
    let (full, genotypic) = predict_combined(&c.model, &g_new, &DMatrix::zeros(new_panel.n_lines(), 0))?;
    let mut text = String::from("line_id,prediction,genotypic\n");
    for (i, id) in new_panel.line_ids().iter().enumerate() {
        text.push_str(&format!("{},{},{}\n", id, full[i], genotypic[i]));
    }
    write(out, &o.file("predictions.csv"), &text)?;
    Ok(o)
}

fn level_fits(cfg: &RunConfig, level: Option<usize>, panel: &MarkerPanel, phenotype: &Phenotype) -> Result<Vec<RegionFit>> {
    let tree = tree(cfg, panel)?;
    let level = level.unwrap_or(tree.depth());
    let nodes = tree.level_nodes(level);
    if nodes.is_empty() {
        bail!("the region tree has no level {level}");
    }
    fit_nodes(cfg, panel, phenotype, &nodes)
}

pub fn select(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let (panel, phenotype) = load_data(cfg)?;
    let fits = level_fits(cfg, cfg.select.level, &panel, &phenotype)?;
    let regions: Vec<&Region> = fits.iter().map(|f| &f.region).collect();
    let densities = region_densities(&panel, &regions)?;
    let h2: Vec<f64> = fits.iter().map(|f| f.h2()).collect();
    let weights = KernelWeights::from_scores(&h2, WeightMethod::Heritability).map_err(|_| locepi::Error::NoGeneticSignal)?;
    let input = SelectionInput::new(
        eblup_matrix(&fits),
        densities,
        weights.weights().to_vec(),
        cfg.select.h1,
        cfg.select.h2,
    )?;
    let jannink = jannink_index(&input);
    let preference = preference_index(&input)?;
    let mut o = Outcome::default();
    write_selection(out.join(o.file("selection.csv")), panel.line_ids(), &jannink, &preference)?;
    o.notes.push("densities: mean population frequency of the carried allele over region markers".into());
    Ok(o)
}

pub fn cross(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let (panel, phenotype) = load_data(cfg)?;
    let fits = level_fits(cfg, cfg.cross.level, &panel, &phenotype)?;
    let g = eblup_matrix(&fits);
    let index = |id: &str| panel.line_index(id).with_context(|| format!("unknown line {id}"));
    let pairs: Vec<(usize, usize)> = if cfg.cross.pairs.is_empty() {
        let mut order: Vec<usize> = (0..panel.n_lines()).collect();
        let total: Vec<f64> = g.row_iter().map(|r| r.sum()).collect();
        order.sort_by(|&a, &b| total[b].total_cmp(&total[a]).then(a.cmp(&b)));
        order.truncate(cfg.cross.top.max(2).min(panel.n_lines()));
        let mut p = Vec::new();
        for i in 0..order.len() {
            for j in i + 1..order.len() {
                p.push((order[i], order[j]));
            }
        }
        p
    } else {
        cfg.cross
            .pairs
            .iter()
            .map(|(a, b)| Ok((index(a)?, index(b)?)))
            .collect::<Result<_>>()?
    };
    let rows: Vec<Vec<f64>> = g.row_iter().map(|r| r.iter().copied().collect()).collect();
    let parents: Vec<(&[f64], &[f64])> = pairs.iter().map(|&(a, b)| (rows[a].as_slice(), rows[b].as_slice())).collect();
    let crosses: Vec<_> = cross_many(&parents, cfg.cross.n_samples, cfg.seed, CrossMode::Auto)?
        .into_iter()
        .zip(&pairs)
        .map(|(c, &(a, b))| c.with_parents(panel.line_ids()[a].clone(), panel.line_ids()[b].clone()))
        .collect();
    let mut o = Outcome::default();
    write_crosses(out.join(o.file("crosses.csv")), &crosses)?;
    if cfg.cross.dump_samples {
        write_cross_samples(out.join(o.file("cross_samples.csv")), &crosses)?;
    }
    o.notes.push(ASSORTMENT_NOTE.to_string());
    Ok(o)
}

fn write(out: &Path, name: &str, text: &str) -> Result<()> {
    let p = out.join(name);
    std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
}
