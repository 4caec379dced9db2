//! Short-range potential: basis-screen tables, screen potentials, and the
//! neighbor-block sum including the self term.
//!
//! A table holds, for each basis screen (the screen of a unit charge placed
//! at a node of the reference element), the order-`p` FEM solution of the
//! screen's potential on a cube patch centered on the host element. Tables
//! are built once at `h = 1` and rescaled. Any screen is the order-`q`
//! Lagrange combination in its offset of the basis screens, so
//! `Phi_sc(y) = Q sum_j l_j(delta) Phi_j(y)`.
//!
//! Only symmetry-canonical basis screens are solved and stored: node indices
//! `(a, b, c)` map to `min(a, q - a)` per axis, then sorted. The others
//! follow by reflecting and permuting coordinates.

use std::io::{Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::charges::ChargeSystem;
use crate::direct::{screen_potential, QuadratureOptions, SeparableScreen};
use crate::error::{Error, Result};
use crate::fem::{interpolation_1d, FOUR_PI, DirichletProblem, Lattice1D, SolveReport};
use crate::mesh::{Basis1D, Mesh, Vec3};
use crate::screens::ScreenSolver;
use crate::tensor::apply_tensor3;

const MAGIC: &[u8; 4] = b"PSTB";
const FORMAT_VERSION: u32 = 1;

/// Neighbor block of `block^3` elements around the target's element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CutoffPolicy {
    block: usize,
}

impl CutoffPolicy {
    pub fn new(block: usize) -> Result<Self> {
        if block % 2 == 0 {
            return Err(Error::Config(format!("short-range block {block} must be odd")));
        }
        if block < 7 {
            return Err(Error::Config(format!("short-range block {block} gives a cutoff below 3")));
        }
        Ok(Self { block })
    }

    pub fn block(&self) -> usize {
        self.block
    }

    /// Element offsets reached in each direction.
    pub fn reach(&self) -> usize {
        (self.block - 1) / 2
    }

    /// Cutoff in units of `h`.
    pub fn radius(&self) -> f64 {
        self.reach() as f64
    }
}

/// Table build parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableSpec {
    pub q: usize,
    /// Elements from the host to the edge of the stored patch; the patch
    /// covers `|y_d| <= extent + 1/2` in units of `h`.
    pub extent: usize,
    /// Half-width of the solve patch relative to the stored patch.
    pub enlargement: f64,
    /// Relative residual for each patch solve.
    pub tol: f64,
}

impl TableSpec {
    pub fn for_policy(q: usize, policy: &CutoffPolicy) -> Self {
        Self { q, extent: policy.reach() + 1, enlargement: 2.0, tol: 1e-11 }
    }

    /// Elements from the host to the edge of the solve patch.
    pub fn solve_extent(&self) -> usize {
        let half = self.enlargement * (self.extent as f64 + 0.5) - 0.5;
        (half - 1e-9).ceil().max(self.extent as f64) as usize
    }

    fn validate(&self) -> Result<()> {
        if !(1..=6).contains(&self.q) {
            return Err(Error::Config(format!("table order q={} outside 1..=6", self.q)));
        }
        if self.extent < 2 {
            return Err(Error::Config("table extent must be at least 2 elements".into()));
        }
        if !(self.enlargement >= 1.0) || !self.tol.is_finite() || self.tol <= 0.0 {
            return Err(Error::Config("table enlargement must be >= 1 and tolerance positive".into()));
        }
        Ok(())
    }
}

/// Coordinate map from a basis screen to its canonical representative:
/// `Phi_j(y) = Phi_canon(z)` with `z_k = sign[perm[k]] * y[perm[k]]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Symmetry {
    canon: usize,
    perm: [usize; 3],
    flip: [bool; 3],
}

/// Canonical node triples for order `q` in storage order.
pub fn canonical_nodes(q: usize) -> Vec<[usize; 3]> {
    let half = q / 2;
    let mut out = Vec::new();
    for a in 0..=half {
        for b in a..=half {
            for c in b..=half {
                out.push([a, b, c]);
            }
        }
    }
    out
}

fn symmetry_of(q: usize, node: [usize; 3], canon: &[[usize; 3]]) -> Symmetry {
    let mut reduced = [0usize; 3];
    let mut flip = [false; 3];
    for d in 0..3 {
        if q - node[d] < node[d] {
            reduced[d] = q - node[d];
            flip[d] = true;
        } else {
            reduced[d] = node[d];
        }
    }
    let mut perm = [0usize, 1, 2];
    perm.sort_by_key(|&d| (reduced[d], d));
    let key = [reduced[perm[0]], reduced[perm[1]], reduced[perm[2]]];
    let canon = canon.iter().position(|&c| c == key).expect("canonical node present");
    Symmetry { canon, perm, flip }
}

/// Basis-screen potential tables for one order `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialTable {
    pub spec: TableSpec,
    pub p: usize,
    canonical: Vec<[usize; 3]>,
    /// Nodal values per canonical screen on the stored patch, x-fastest.
    values: Vec<Vec<f64>>,
    /// Worst achieved relative residual over the patch solves.
    pub max_residual: f64,
    symmetries: Vec<Symmetry>,
    lattice: Lattice1D,
    basis_p: Basis1D,
    basis_q: Basis1D,
}

impl PotentialTable {
    fn assemble(spec: TableSpec, canonical: Vec<[usize; 3]>, values: Vec<Vec<f64>>, max_residual: f64) -> Self {
        let q = spec.q;
        let p = q + 2;
        let n1 = q + 1;
        let symmetries = (0..n1 * n1 * n1)
            .map(|j| symmetry_of(q, [j % n1, (j / n1) % n1, j / (n1 * n1)], &canonical))
            .collect();
        let lattice = Lattice1D {
            n_el: 2 * spec.extent + 1,
            order: p,
            h: 1.0,
            periodic: false,
            origin: -(spec.extent as f64 + 0.5),
        };
        Self {
            spec,
            p,
            canonical,
            values,
            max_residual,
            symmetries,
            lattice,
            basis_p: Basis1D::new(p, 1.0),
            basis_q: Basis1D::new(q, 1.0),
        }
    }

    pub fn q(&self) -> usize {
        self.spec.q
    }

    pub fn n_sc(&self) -> usize {
        (self.spec.q + 1).pow(3)
    }

    /// Stored patch nodes per direction.
    pub fn n_nodes(&self) -> usize {
        self.lattice.n_nodes()
    }

    pub fn canonical(&self) -> &[[usize; 3]] {
        &self.canonical
    }

    /// Half-width of the stored patch in units of `h`.
    pub fn half_width(&self) -> f64 {
        self.spec.extent as f64 + 0.5
    }

    /// Order-`q` Lagrange weights `l_j(delta)` in κ order, `delta` in units
    /// of `h`.
    pub fn offset_weights(&self, delta: Vec3) -> Vec<f64> {
        let lx = self.basis_q.values(delta[0]);
        let ly = self.basis_q.values(delta[1]);
        let lz = self.basis_q.values(delta[2]);
        let mut out = Vec::with_capacity(self.n_sc());
        for z in &lz {
            for y in &ly {
                for x in &lx {
                    out.push(x * y * z);
                }
            }
        }
        out
    }

    /// `sum_j coeffs[j] Phi_j(y)` with `y` in units of `h` (table scale).
    pub fn eval_combination(&self, coeffs: &[f64], y: Vec3) -> Result<f64> {
        let hw = self.half_width() * (1.0 + 1e-12);
        if y.iter().any(|v| !v.is_finite() || v.abs() > hw) {
            return Err(Error::Range(format!(
                "displacement {y:?} (units of h) outside table half-width {}",
                self.half_width()
            )));
        }
        let p = self.p;
        let n = self.n_nodes();
        let mut start = [[0usize; 2]; 3];
        let mut w = [[[0.0f64; 8]; 2]; 3];
        for d in 0..3 {
            for (s, v) in [y[d], -y[d]].into_iter().enumerate() {
                let (e, t) = self.lattice.locate(v);
                start[d][s] = e * p;
                self.basis_p.eval_all(t, &mut w[d][s][..=p]);
            }
        }
        let mut total = 0.0;
        for (j, &cj) in coeffs.iter().enumerate() {
            if cj == 0.0 {
                continue;
            }
            let sym = self.symmetries[j];
            let table = &self.values[sym.canon];
            let sel = |k: usize| {
                let d = sym.perm[k];
                let s = sym.flip[d] as usize;
                (start[d][s], &w[d][s])
            };
            let (s0, w0) = sel(0);
            let (s1, w1) = sel(1);
            let (s2, w2) = sel(2);
            let mut acc = 0.0;
            for c in 0..=p {
                let mut plane = 0.0;
                for b in 0..=p {
                    let row = &table[s0 + n * ((s1 + b) + n * (s2 + c))..];
                    let mut line = 0.0;
                    for a in 0..=p {
                        line += w0[a] * row[a];
                    }
                    plane += w1[b] * line;
                }
                acc += w2[c] * plane;
            }
            total += cj * acc;
        }
        Ok(total)
    }

    /// Basis screen `j` at `y` (table scale, `h = 1`).
    pub fn eval_basis(&self, j: usize, y: Vec3) -> Result<f64> {
        let mut coeffs = vec![0.0; self.n_sc()];
        coeffs[j] = 1.0;
        self.eval_combination(&coeffs, y)
    }

    /// Write the table in the versioned binary cache format.
    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes();
        let mut f = std::fs::File::create(path)?;
        f.write_all(&bytes)?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::new();
        b.extend_from_slice(MAGIC);
        b.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        for v in [self.spec.q as u32, self.p as u32, self.spec.extent as u32] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        for v in [self.spec.enlargement, self.spec.tol, self.max_residual] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b.extend_from_slice(&(self.canonical.len() as u32).to_le_bytes());
        b.extend_from_slice(&(self.n_nodes() as u32).to_le_bytes());
        for (node, vals) in self.canonical.iter().zip(&self.values) {
            for &i in node {
                b.extend_from_slice(&(i as u32).to_le_bytes());
            }
            for v in vals {
                b.extend_from_slice(&v.to_le_bytes());
            }
        }
        let digest = Sha256::digest(&b);
        b.extend_from_slice(&digest);
        b
    }

    /// Read a cached table; fails unless the file is intact and was built
    /// with exactly `spec`.
    pub fn load(path: &Path, spec: &TableSpec) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        let table = Self::from_bytes(&bytes)?;
        if table.spec != *spec {
            return Err(Error::Cache(format!(
                "cached table built for {:?}, requested {:?}",
                table.spec, spec
            )));
        }
        Ok(table)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 + 4 + 32 || &bytes[..4] != MAGIC {
            return Err(Error::Cache("not a table cache file".into()));
        }
        let (body, digest) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(Error::Cache("checksum mismatch".into()));
        }
        let mut r = ByteReader { data: body, pos: 4 };
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Cache(format!("unsupported table format version {version}")));
        }
        let q = r.u32()? as usize;
        let p = r.u32()? as usize;
        let extent = r.u32()? as usize;
        let enlargement = r.f64()?;
        let tol = r.f64()?;
        let max_residual = r.f64()?;
        let n_canon = r.u32()? as usize;
        let n = r.u32()? as usize;
        let spec = TableSpec { q, extent, enlargement, tol };
        spec.validate().map_err(|e| Error::Cache(e.to_string()))?;
        if p != q + 2 || n != (2 * extent + 1) * p + 1 || canonical_nodes(q).len() != n_canon {
            return Err(Error::Cache("inconsistent table header".into()));
        }
        let mut canonical = Vec::with_capacity(n_canon);
        let mut values = Vec::with_capacity(n_canon);
        for _ in 0..n_canon {
            canonical.push([r.u32()? as usize, r.u32()? as usize, r.u32()? as usize]);
            let mut v = Vec::with_capacity(n * n * n);
            for _ in 0..n * n * n {
                v.push(r.f64()?);
            }
            values.push(v);
        }
        if r.pos != body.len() || canonical != canonical_nodes(q) {
            return Err(Error::Cache("unexpected table layout".into()));
        }
        Ok(Self::assemble(spec, canonical, values, max_residual))
    }
}

struct ByteReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl ByteReader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let s = self.data.get(self.pos..end).ok_or_else(|| Error::Cache("truncated file".into()))?;
        self.pos = end;
        Ok(s.try_into().expect("slice length"))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

/// Patch solve of each canonical basis screen: `-lap Phi = 4 pi rho_j` on the
/// enlarged patch with boundary values from direct quadrature of the screen
/// potential, restricted to the stored patch.
pub fn build_tables(spec: &TableSpec) -> Result<PotentialTable> {
    spec.validate()?;
    let q = spec.q;
    let p = q + 2;
    let ef = spec.solve_extent();
    let n_el = 2 * ef + 1;
    let origin = -(ef as f64 + 0.5);
    let lat_p = Lattice1D { n_el, order: p, h: 1.0, periodic: false, origin };
    let lat_q = lat_p.with_order(q);
    let problem = DirichletProblem::new(lat_p)?;
    let interp = interpolation_1d(&lat_q, &lat_p);
    let mass = &problem.operator().mass;
    let solver = ScreenSolver::new(q, 1.0)?;
    let nq = lat_q.n_nodes();
    let n = lat_p.n_nodes();
    let canonical = canonical_nodes(q);
    let quad = QuadratureOptions { ratio: 0.5, points: 6, max_depth: 6 };
    let boundary_idx: Vec<usize> = (0..n * n * n)
        .filter(|&i| problem.is_boundary([i % n, (i / n) % n, i / (n * n)]))
        .collect();
    let stored_n = (2 * spec.extent + 1) * p + 1;
    let shift = (ef - spec.extent) * p;
    let mut values = Vec::with_capacity(canonical.len());
    let mut max_residual = 0.0f64;
    for node in &canonical {
        let delta = node.map(|a| solver.basis().nodes()[a]);
        let screen = solver.solve(delta);
        let mut rho_q = vec![0.0; nq * nq * nq];
        let host = ef * q;
        for (kappa, &c) in screen.c.iter().enumerate() {
            let [i, j, k] = crate::screens::unkappa(q, kappa);
            rho_q[(host + i) + nq * ((host + j) + nq * (host + k))] = c;
        }
        let mut b = apply_tensor3(mass, &apply_tensor3(&interp, &rho_q));
        b.iter_mut().for_each(|v| *v *= FOUR_PI);
        let sep = SeparableScreen::new(&solver, delta);
        let mut g = vec![0.0; n * n * n];
        for &i in &boundary_idx {
            let y = [i % n, (i / n) % n, i / (n * n)].map(|a| lat_p.node_position(a));
            g[i] = screen_potential(&sep, y, &quad);
        }
        let (sol, report): (Vec<f64>, SolveReport) = problem.solve(&b, &g, spec.tol)?;
        max_residual = max_residual.max(report.relative_residual);
        let mut stored = Vec::with_capacity(stored_n.pow(3));
        for iz in 0..stored_n {
            for iy in 0..stored_n {
                let base = shift + n * ((iy + shift) + n * (iz + shift));
                stored.extend_from_slice(&sol[base..base + stored_n]);
            }
        }
        values.push(stored);
    }
    Ok(PotentialTable::assemble(*spec, canonical, values, max_residual))
}

/// Load tables from `cache` when present and matching, else build them and
/// write the cache.
pub fn load_or_build_tables(spec: &TableSpec, cache: Option<&Path>) -> Result<PotentialTable> {
    if let Some(path) = cache {
        if path.exists() {
            return PotentialTable::load(path, spec);
        }
        let t = build_tables(spec)?;
        t.save(path)?;
        return Ok(t);
    }
    build_tables(spec)
}

/// Screen potential of a charge `charge` with offset `delta` at displacement
/// `y` from its host element center (physical units, element size `h`).
pub fn eval_screen_potential(
    charge: f64,
    delta: Vec3,
    y: Vec3,
    h: f64,
    tables: &PotentialTable,
) -> Result<f64> {
    let l = tables.offset_weights(delta.map(|d| d / h));
    Ok(charge * tables.eval_combination(&l, y.map(|v| v / h))? / h)
}

/// Combined basis-screen coefficients `sum_i Q_i l_j(delta_i)` of the
/// charges hosted by one element.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementChargeAggregate {
    pub element: [usize; 3],
    pub coeffs: Vec<f64>,
}

impl ElementChargeAggregate {
    /// Screen potential of the aggregate at displacement `y` from the
    /// element center.
    pub fn eval(&self, y: Vec3, h: f64, tables: &PotentialTable) -> Result<f64> {
        Ok(tables.eval_combination(&self.coeffs, y.map(|v| v / h))? / h)
    }
}

/// Fold the charges `members` (all hosted by `element`) into one aggregate.
pub fn aggregate_element(
    element: [usize; 3],
    members: &[usize],
    charges: &ChargeSystem,
    mesh: &Mesh,
    tables: &PotentialTable,
) -> Result<ElementChargeAggregate> {
    if !charges.is_located() {
        return Err(Error::Input("charges must be located before aggregation".into()));
    }
    let mut coeffs = vec![0.0; tables.n_sc()];
    for &i in members {
        let loc = charges.locations()[i];
        if loc.element != element {
            return Err(Error::Input(format!("charge {i} is not hosted by element {element:?}")));
        }
        let l = tables.offset_weights(loc.offset.map(|d| d / mesh.h));
        let qi = charges.charges[i];
        coeffs.iter_mut().zip(&l).for_each(|(c, w)| *c += qi * w);
    }
    Ok(ElementChargeAggregate { element, coeffs })
}

/// Wrap each component into `[-L/2, L/2)`.
pub fn minimum_image(dx: Vec3, length: f64) -> Vec3 {
    dx.map(|v| {
        let mut r = v - length * (v / length + 0.5).floor();
        if r >= 0.5 * length {
            r -= length;
        }
        if r < -0.5 * length {
            r += length;
        }
        r
    })
}

/// Per-element charge lists and aggregates for short-range evaluation.
#[derive(Debug, Clone)]
pub struct ShortRange<'a> {
    mesh: &'a Mesh,
    tables: &'a PotentialTable,
    policy: CutoffPolicy,
    members: Vec<Vec<usize>>,
    aggregates: Vec<Option<ElementChargeAggregate>>,
}

impl<'a> ShortRange<'a> {
    pub fn new(
        mesh: &'a Mesh,
        charges: &ChargeSystem,
        tables: &'a PotentialTable,
        policy: CutoffPolicy,
    ) -> Result<Self> {
        // On a bounded mesh, blocks are clipped at the boundary instead.
        if mesh.periodic() && mesh.n_el < policy.block() {
            return Err(Error::Config(format!(
                "{} elements per direction cannot hold a {}-element cutoff block",
                mesh.n_el,
                policy.block()
            )));
        }
        if tables.q() != mesh.q {
            return Err(Error::Config(format!("tables built for q={}, mesh has q={}", tables.q(), mesh.q)));
        }
        if tables.spec.extent < policy.reach() {
            return Err(Error::Range(format!(
                "table extent {} does not cover cutoff reach {}",
                tables.spec.extent,
                policy.reach()
            )));
        }
        if !charges.is_located() {
            return Err(Error::Input("charges must be located before short-range evaluation".into()));
        }
        let mut members = vec![Vec::new(); mesh.n_elements()];
        for (i, loc) in charges.locations().iter().enumerate() {
            members[mesh.flat_element(loc.element)].push(i);
        }
        let aggregates = members
            .iter()
            .enumerate()
            .map(|(e, m)| {
                if m.is_empty() {
                    Ok(None)
                } else {
                    aggregate_element(mesh.unflatten_element(e), m, charges, mesh, tables).map(Some)
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self { mesh, tables, policy, members, aggregates })
    }

    pub fn members(&self, element: [usize; 3]) -> &[usize] {
        &self.members[self.mesh.flat_element(element)]
    }

    /// Short-range potential at charge `target`, excluding its own `1/R`
    /// and including its self-screen term.
    pub fn eval_charge(&self, charges: &ChargeSystem, target: usize) -> Result<f64> {
        let loc = charges.locations()[target];
        self.eval_at(charges, loc.element, loc.offset, Some(target))
    }

    /// Short-range potential at an arbitrary point.
    pub fn eval_point(&self, charges: &ChargeSystem, point: Vec3) -> Result<f64> {
        let loc = crate::mesh::locate_charge(point, self.mesh)?;
        self.eval_at(charges, loc.element, loc.offset, None)
    }

    /// Same as [`ShortRange::eval_charge`] but evaluating every source
    /// screen separately instead of through element aggregates.
    pub fn eval_charge_pairwise(&self, charges: &ChargeSystem, target: usize) -> Result<f64> {
        let loc = charges.locations()[target];
        let h = self.mesh.h;
        let r = self.policy.reach() as i64;
        let mut total = 0.0;
        for oz in -r..=r {
            for oy in -r..=r {
                for ox in -r..=r {
                    let Some(e) = self.mesh.neighbor(loc.element, [ox, oy, oz]) else { continue };
                    let y = [
                        loc.offset[0] - ox as f64 * h,
                        loc.offset[1] - oy as f64 * h,
                        loc.offset[2] - oz as f64 * h,
                    ];
                    for &j in self.members(e) {
                        let src = charges.locations()[j];
                        let qj = charges.charges[j];
                        if j != target {
                            total += qj / pair_distance(y, src.offset, j, target)?;
                        }
                        total -= eval_screen_potential(qj, src.offset, y, h, self.tables)?;
                    }
                }
            }
        }
        Ok(total)
    }

    fn eval_at(&self, charges: &ChargeSystem, element: [usize; 3], offset: Vec3, skip: Option<usize>) -> Result<f64> {
        let h = self.mesh.h;
        let r = self.policy.reach() as i64;
        let mut total = 0.0;
        for oz in -r..=r {
            for oy in -r..=r {
                for ox in -r..=r {
                    let Some(e) = self.mesh.neighbor(element, [ox, oy, oz]) else { continue };
                    let flat = self.mesh.flat_element(e);
                    let Some(agg) = &self.aggregates[flat] else { continue };
                    let y = [offset[0] - ox as f64 * h, offset[1] - oy as f64 * h, offset[2] - oz as f64 * h];
                    for &j in &self.members[flat] {
                        if Some(j) == skip {
                            continue;
                        }
                        let src = charges.locations()[j];
                        total += charges.charges[j] / pair_distance(y, src.offset, j, skip.unwrap_or(usize::MAX))?;
                    }
                    total -= agg.eval(y, h, self.tables)?;
                }
            }
        }
        Ok(total)
    }

    /// Short-range potential at every charge.
    pub fn eval_all(&self, charges: &ChargeSystem) -> Result<Vec<f64>> {
        (0..charges.len()).map(|i| self.eval_charge(charges, i)).collect()
    }
}

fn pair_distance(y: Vec3, src_offset: Vec3, j: usize, target: usize) -> Result<f64> {
    let d = [y[0] - src_offset[0], y[1] - src_offset[1], y[2] - src_offset[2]];
    let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    if r == 0.0 {
        let who = if target == usize::MAX { "evaluation point".to_string() } else { format!("charge {target}") };
        return Err(Error::SingularDistance(format!("charge {j} coincides with {who}")));
    }
    Ok(r)
}

/// Target of a short-range evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Charge(usize),
    Point(Vec3),
}

/// One-shot short-range evaluation for a single target.
pub fn eval_short_range(
    target: Target,
    charges: &ChargeSystem,
    mesh: &Mesh,
    policy: CutoffPolicy,
    tables: &PotentialTable,
) -> Result<f64> {
    let sr = ShortRange::new(mesh, charges, tables, policy)?;
    match target {
        Target::Charge(i) => {
            if i >= charges.len() {
                return Err(Error::Input(format!("charge index {i} out of range")));
            }
            sr.eval_charge(charges, i)
        }
        Target::Point(x) => sr.eval_point(charges, x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_counts() {
        assert_eq!(canonical_nodes(1).len(), 1);
        assert_eq!(canonical_nodes(2).len(), 4);
        assert_eq!(canonical_nodes(3).len(), 4);
        assert_eq!(canonical_nodes(4).len(), 10);
    }

    #[test]
    fn every_node_maps_to_a_canonical_node() {
        for q in 1..=4 {
            let canon = canonical_nodes(q);
            let n1 = q + 1;
            for j in 0..n1 * n1 * n1 {
                let node = [j % n1, (j / n1) % n1, j / (n1 * n1)];
                let s = symmetry_of(q, node, &canon);
                for k in 0..3 {
                    let d = s.perm[k];
                    let v = if s.flip[d] { q - node[d] } else { node[d] };
                    assert_eq!(canon[s.canon][k], v);
                }
            }
        }
    }

    #[test]
    fn minimum_image_examples() {
        let l = 2.0;
        let w = minimum_image([0.9 * l, -0.5 * l, 0.25 * l], l);
        assert!((w[0] + 0.1 * l).abs() < 1e-15);
        assert_eq!(w[1], -0.5 * l);
        assert_eq!(w[2], 0.25 * l);
        assert_eq!(minimum_image(w, l), w);
    }

    #[test]
    fn cutoff_policy_validation() {
        assert!(CutoffPolicy::new(8).is_err());
        assert!(CutoffPolicy::new(5).is_err());
        let p = CutoffPolicy::new(7).unwrap();
        assert_eq!(p.radius(), 3.0);
    }

    #[test]
    fn offset_lagrange_weights_reproduce_screen_coefficients() {
        let q = 3;
        let solver = ScreenSolver::new(q, 1.0).unwrap();
        let t = PotentialTable::assemble(
            TableSpec { q, extent: 2, enlargement: 1.0, tol: 1e-8 },
            canonical_nodes(q),
            vec![vec![0.0; 26 * 26 * 26]; 4],
            0.0,
        );
        let delta = [0.31, -0.12, 0.44];
        let l = t.offset_weights(delta);
        let direct = solver.solve(delta).c;
        let n1 = q + 1;
        let mut combined = vec![0.0; direct.len()];
        for j in 0..n1 * n1 * n1 {
            let node = [j % n1, (j / n1) % n1, j / (n1 * n1)].map(|a| solver.basis().nodes()[a]);
            let cj = solver.solve(node).c;
            combined.iter_mut().zip(&cj).for_each(|(a, b)| *a += l[j] * b);
        }
        for (a, b) in combined.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
