//! Leray-Schauder projections on finite samples of a compact set.
//!
//! Given centers `x_1..x_n` and a radius `ε`, the projection is
//!
//! ```text
//! P x = Σ μ_i(x) x_i / Σ μ_j(x),   μ_i(x) = max(ε - ‖x - x_i‖, 0)
//! ```
//!
//! which is continuous wherever the denominator is positive and moves every
//! covered point by strictly less than `ε`. [`greedy_net`] builds an
//! `ε`-separated net (pairwise distances `>= ε`), which in addition makes
//! every center a fixed point of `P`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::function_space::{build_quadrature, distance, PNorm, Quadrature, SampledFunction};
use crate::textio::{fmt_f64, join_f64, parse_f64, parse_f64_list, parse_usize, Lines};

/// Slack allowed when checking the separation of a net.
pub const SEPARATION_SLACK: f64 = 1e-12;

/// A finite, nonempty sample of a compact set, all on one quadrature.
#[derive(Debug, Clone)]
pub struct CompactSampleSet {
    members: Vec<SampledFunction>,
    p: PNorm,
}

impl CompactSampleSet {
    pub fn new(members: Vec<SampledFunction>, p: PNorm) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::Usage("compact sample set must be nonempty".into()))?;
        for m in &members[1..] {
            first.check_same(m)?;
        }
        Ok(CompactSampleSet { members, p })
    }

    pub fn members(&self) -> &[SampledFunction] {
        &self.members
    }

    pub fn p(&self) -> PNorm {
        self.p
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn quadrature(&self) -> &Arc<Quadrature> {
        self.members[0].quadrature()
    }
}

/// Whether a projector's centers are required to be `ε`-separated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetMode {
    /// Pairwise center distances `>= ε - SEPARATION_SLACK`; centers are fixed points.
    Separated,
    /// Any center set; only the `‖x - Px‖ < ε` guarantee remains.
    Arbitrary,
}

#[derive(Debug, Clone)]
pub struct LerayProjector {
    centers: Vec<SampledFunction>,
    epsilon: f64,
    p: PNorm,
    mode: NetMode,
}

impl LerayProjector {
    /// Wraps an explicit center set. In [`NetMode::Separated`] the separation is verified.
    pub fn from_centers(
        centers: Vec<SampledFunction>,
        epsilon: f64,
        p: PNorm,
        mode: NetMode,
    ) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Usage(format!("epsilon must be positive, got {epsilon}")));
        }
        let first = centers
            .first()
            .ok_or_else(|| Error::Usage("a projector needs at least one center".into()))?;
        for c in &centers[1..] {
            first.check_same(c)?;
        }
        let proj = LerayProjector {
            centers,
            epsilon,
            p,
            mode,
        };
        if mode == NetMode::Separated {
            let (i, j, d) = proj.min_separation()?;
            if d < epsilon - SEPARATION_SLACK {
                return Err(Error::Usage(format!(
                    "centers {i} and {j} are {d} apart, closer than epsilon = {epsilon}"
                )));
            }
        }
        Ok(proj)
    }

    pub fn centers(&self) -> &[SampledFunction] {
        &self.centers
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn p(&self) -> PNorm {
        self.p
    }

    pub fn mode(&self) -> NetMode {
        self.mode
    }

    pub fn quadrature(&self) -> &Arc<Quadrature> {
        self.centers[0].quadrature()
    }

    /// Closest pair of centers `(i, j, distance)`; `(0, 0, +inf)` for a single center.
    pub fn min_separation(&self) -> Result<(usize, usize, f64)> {
        let mut best = (0, 0, f64::INFINITY);
        for i in 0..self.centers.len() {
            for j in i + 1..self.centers.len() {
                let d = distance(&self.centers[i], &self.centers[j], self.p)?;
                if d < best.2 {
                    best = (i, j, d);
                }
            }
        }
        Ok(best)
    }

    /// Index and distance of the nearest center.
    pub fn nearest_center(&self, x: &SampledFunction) -> Result<(usize, f64)> {
        let mut best = (0, f64::INFINITY);
        for (i, c) in self.centers.iter().enumerate() {
            let d = distance(x, c, self.p)?;
            if d < best.1 {
                best = (i, d);
            }
        }
        Ok(best)
    }
}

/// Deterministic greedy `ε`-net: walks `K` in order and promotes every member
/// not strictly within `ε` of an existing center.
pub fn greedy_net(k: &CompactSampleSet, epsilon: f64) -> Result<LerayProjector> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Usage(format!("epsilon must be positive, got {epsilon}")));
    }
    let mut centers: Vec<SampledFunction> = Vec::new();
    for x in k.members() {
        let mut covered = false;
        for c in &centers {
            if distance(x, c, k.p())? < epsilon {
                covered = true;
                break;
            }
        }
        if !covered {
            centers.push(x.clone());
        }
    }
    Ok(LerayProjector {
        centers,
        epsilon,
        p: k.p(),
        mode: NetMode::Separated,
    })
}

/// `μ_i(x) = max(ε - ‖x - x_i‖, 0)` in center order.
pub fn hat_coefficients(proj: &LerayProjector, x: &SampledFunction) -> Result<Vec<f64>> {
    proj.centers
        .iter()
        .map(|c| Ok((proj.epsilon - distance(x, c, proj.p)?).max(0.0)))
        .collect()
}

/// Barycentric coordinates `μ_i(x) / Σ μ_j(x)` of `P x` in the center frame.
pub fn ls_coordinates(proj: &LerayProjector, x: &SampledFunction) -> Result<Vec<f64>> {
    let mu = hat_coefficients(proj, x)?;
    let total: f64 = mu.iter().sum();
    if total <= 0.0 {
        let (_, nearest) = proj.nearest_center(x)?;
        return Err(Error::Coverage {
            epsilon: proj.epsilon,
            nearest,
        });
    }
    Ok(mu.into_iter().map(|m| m / total).collect())
}

/// Combination `Σ c_i x_i` of the centers.
pub fn combine_centers(proj: &LerayProjector, coords: &[f64]) -> Result<SampledFunction> {
    if coords.len() != proj.centers.len() {
        return Err(Error::Usage(format!(
            "{} coordinates for {} centers",
            coords.len(),
            proj.centers.len()
        )));
    }
    let quad = proj.quadrature();
    let mut out = vec![0.0; quad.len()];
    for (c, x) in coords.iter().zip(&proj.centers) {
        if *c == 0.0 {
            continue;
        }
        for (o, v) in out.iter_mut().zip(x.values()) {
            *o += c * v;
        }
    }
    Ok(SampledFunction::from_raw(quad.clone(), out))
}

/// The Leray-Schauder projection `P x`.
pub fn ls_project(proj: &LerayProjector, x: &SampledFunction) -> Result<SampledFunction> {
    let coords = ls_coordinates(proj, x)?;
    // A single active hat means P x is exactly that center.
    let mut active = coords.iter().enumerate().filter(|(_, &c)| c > 0.0);
    if let (Some((i, _)), None) = (active.next(), active.next()) {
        return Ok(proj.centers[i].clone());
    }
    combine_centers(proj, &coords)
}

const NET_MAGIC: &str = "projop-net";

/// Plain-text archive of a projector: header lines followed by one line of
/// node values per center.
pub fn write_projector(proj: &LerayProjector) -> String {
    let q = proj.quadrature();
    let mut s = String::new();
    s.push_str(&format!("{NET_MAGIC} v1\n"));
    s.push_str(&format!("dimension {}\n", q.dimension()));
    s.push_str(&format!("points_per_axis {}\n", q.points_per_axis()));
    s.push_str(&format!("p {}\n", fmt_f64(proj.p.value())));
    s.push_str(&format!("epsilon {}\n", fmt_f64(proj.epsilon)));
    let mode = match proj.mode {
        NetMode::Separated => "separated",
        NetMode::Arbitrary => "arbitrary",
    };
    s.push_str(&format!("mode {mode}\n"));
    s.push_str(&format!("centers {}\n", proj.centers.len()));
    for c in &proj.centers {
        s.push_str(&join_f64(c.values()));
        s.push('\n');
    }
    s
}

/// Parses [`write_projector`] output. The separation is not re-checked here;
/// see [`check_net`].
pub fn read_projector(text: &str) -> Result<LerayProjector> {
    let mut lines = Lines::new(text);
    let (_, magic) = lines.expect_line("header")?;
    if magic != format!("{NET_MAGIC} v1") {
        return Err(Error::Format(format!("not a net archive: `{magic}`")));
    }
    let d = parse_usize(lines.expect_key("dimension")?, "dimension")?;
    let ppa = parse_usize(lines.expect_key("points_per_axis")?, "points_per_axis")?;
    let p = PNorm::new(parse_f64(lines.expect_key("p")?, "p")?)?;
    let epsilon = parse_f64(lines.expect_key("epsilon")?, "epsilon")?;
    let mode = match lines.expect_key("mode")? {
        "separated" => NetMode::Separated,
        "arbitrary" => NetMode::Arbitrary,
        other => return Err(Error::Format(format!("unknown net mode `{other}`"))),
    };
    let n = parse_usize(lines.expect_key("centers")?, "centers")?;
    let quad = build_quadrature(d, ppa)?;
    let mut centers = Vec::with_capacity(n);
    for i in 0..n {
        let (_, line) = lines.expect_line(&format!("center {i}"))?;
        let values = parse_f64_list(line, "center values")?;
        centers.push(SampledFunction::new(quad.clone(), values)?);
    }
    if lines.next_line().is_some() {
        return Err(Error::Format("trailing data after the last center".into()));
    }
    LerayProjector::from_centers(centers, epsilon, p, NetMode::Arbitrary).map(|mut pr| {
        pr.mode = mode;
        pr
    })
}

/// Outcome of [`check_net`].
#[derive(Debug, Clone, PartialEq)]
pub struct NetCheck {
    pub centers: usize,
    pub min_distance: f64,
    pub closest_pair: Option<(usize, usize)>,
    pub separated: bool,
}

/// Verifies pairwise separation `>= epsilon - SEPARATION_SLACK`.
pub fn check_net(proj: &LerayProjector, epsilon: f64) -> Result<NetCheck> {
    let (i, j, d) = proj.min_separation()?;
    Ok(NetCheck {
        centers: proj.centers.len(),
        min_distance: d,
        closest_pair: (proj.centers.len() > 1).then_some((i, j)),
        separated: d >= epsilon - SEPARATION_SLACK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constants(vals: &[f64]) -> (Arc<Quadrature>, Vec<SampledFunction>) {
        let q = build_quadrature(1, 4).unwrap();
        let fs = vals.iter().map(|&c| SampledFunction::constant(&q, c)).collect();
        (q, fs)
    }

    fn first_values(fs: &[SampledFunction]) -> Vec<f64> {
        fs.iter().map(|f| f.values()[0]).collect()
    }

    #[test]
    fn singleton_net() {
        let (_, k) = constants(&[0.3]);
        let net = greedy_net(&CompactSampleSet::new(k, PNorm::L2).unwrap(), 1e-3).unwrap();
        assert_eq!(first_values(net.centers()), vec![0.3]);
    }

    #[test]
    fn well_separated_members_all_become_centers() {
        let (_, k) = constants(&[0.0, 1.0, 2.0]);
        let net = greedy_net(&CompactSampleSet::new(k, PNorm::L2).unwrap(), 0.5).unwrap();
        assert_eq!(first_values(net.centers()), vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn close_member_is_covered() {
        let (_, k) = constants(&[0.0, 0.1, 1.0]);
        let net = greedy_net(&CompactSampleSet::new(k, PNorm::L2).unwrap(), 0.5).unwrap();
        assert_eq!(first_values(net.centers()), vec![0.0, 1.0]);
    }

    #[test]
    fn member_exactly_at_epsilon_becomes_a_center() {
        let (_, k) = constants(&[0.0, 0.5]);
        let net = greedy_net(&CompactSampleSet::new(k, PNorm::L2).unwrap(), 0.5).unwrap();
        assert_eq!(net.centers().len(), 2);
    }

    #[test]
    fn hat_pattern_at_a_center() {
        let (_, k) = constants(&[0.0, 1.0, 2.0]);
        let net = greedy_net(&CompactSampleSet::new(k.clone(), PNorm::L2).unwrap(), 0.75).unwrap();
        let mu = hat_coefficients(&net, &k[0]).unwrap();
        assert_eq!(mu, vec![0.75, 0.0, 0.0]);
        assert_eq!(ls_coordinates(&net, &k[1]).unwrap(), vec![0.0, 1.0, 0.0]);
        assert_eq!(ls_project(&net, &k[2]).unwrap(), k[2]);
    }

    #[test]
    fn midpoint_projection() {
        let (q, k) = constants(&[0.0, 1.0]);
        let net = LerayProjector::from_centers(k, 1.0, PNorm::L2, NetMode::Separated).unwrap();
        let x = SampledFunction::constant(&q, 0.5);
        let mu = hat_coefficients(&net, &x).unwrap();
        assert!((mu[0] - 0.5).abs() < 1e-15 && (mu[1] - 0.5).abs() < 1e-15);
        let c = ls_coordinates(&net, &x).unwrap();
        assert!((c[0] - 0.5).abs() < 1e-15 && (c[1] - 0.5).abs() < 1e-15);
        let px = ls_project(&net, &x).unwrap();
        assert!(px.values().iter().all(|v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn uncovered_input_is_a_coverage_error() {
        let (q, k) = constants(&[0.0, 1.0]);
        let net = LerayProjector::from_centers(k, 0.25, PNorm::L2, NetMode::Separated).unwrap();
        let x = SampledFunction::constant(&q, 0.5);
        assert_eq!(hat_coefficients(&net, &x).unwrap(), vec![0.0, 0.0]);
        match ls_project(&net, &x) {
            Err(Error::Coverage { epsilon, nearest }) => {
                assert_eq!(epsilon, 0.25);
                assert!((nearest - 0.5).abs() < 1e-15);
            }
            other => panic!("expected coverage error, got {other:?}"),
        }
    }

    #[test]
    fn single_center_projects_everything_onto_it() {
        let (q, k) = constants(&[0.2]);
        let net = LerayProjector::from_centers(k.clone(), 1.0, PNorm::L2, NetMode::Separated).unwrap();
        for c in [0.0, 0.5, 1.1] {
            let x = SampledFunction::constant(&q, c);
            assert_eq!(ls_project(&net, &x).unwrap(), k[0]);
        }
    }

    #[test]
    fn separated_mode_rejects_close_centers_but_arbitrary_accepts() {
        let (_, k) = constants(&[0.0, 0.1]);
        assert!(LerayProjector::from_centers(k.clone(), 0.5, PNorm::L2, NetMode::Separated).is_err());
        let net = LerayProjector::from_centers(k.clone(), 0.5, PNorm::L2, NetMode::Arbitrary).unwrap();
        // Not a fixed point any more, but still within epsilon.
        let px = ls_project(&net, &k[0]).unwrap();
        assert!(distance(&px, &k[0], PNorm::L2).unwrap() < 0.5);
        assert!(px != k[0]);
    }

    #[test]
    fn invalid_epsilon_and_empty_sets() {
        let (_, k) = constants(&[0.0]);
        let set = CompactSampleSet::new(k.clone(), PNorm::L2).unwrap();
        assert!(greedy_net(&set, 0.0).is_err());
        assert!(greedy_net(&set, f64::NAN).is_err());
        assert!(CompactSampleSet::new(vec![], PNorm::L2).is_err());
        assert!(LerayProjector::from_centers(vec![], 1.0, PNorm::L2, NetMode::Arbitrary).is_err());
    }

    #[test]
    fn archive_round_trips() {
        let q = build_quadrature(2, 3).unwrap();
        let k: Vec<_> = (0..4)
            .map(|i| SampledFunction::from_fn(&q, |x| (i as f64) * x[0] - x[1] / 3.0).unwrap())
            .collect();
        let net = greedy_net(&CompactSampleSet::new(k, PNorm::new(3.0).unwrap()).unwrap(), 0.4).unwrap();
        let text = write_projector(&net);
        let back = read_projector(&text).unwrap();
        assert_eq!(back.centers(), net.centers());
        assert_eq!(back.epsilon().to_bits(), net.epsilon().to_bits());
        assert_eq!(back.p(), net.p());
        assert_eq!(back.mode(), NetMode::Separated);
        assert_eq!(write_projector(&back), text);
        let check = check_net(&back, 0.4).unwrap();
        assert!(check.separated);
        assert!(!check_net(&back, 100.0).unwrap().separated);
    }

    #[test]
    fn malformed_archives_are_rejected() {
        assert!(read_projector("nope").is_err());
        assert!(read_projector("projop-net v1\ndimension 1\n").is_err());
        let q = build_quadrature(1, 2).unwrap();
        let net = LerayProjector::from_centers(vec![SampledFunction::constant(&q, 1.0)], 1.0, PNorm::L2, NetMode::Separated).unwrap();
        let mut text = write_projector(&net);
        text.push_str("1 2\n");
        assert!(read_projector(&text).is_err());
    }
}
