//! C ABI over the `kwdual` library.
//!
//! Groups and lattices are opaque handles created by `*_parse`,
//! `*_generate` or `*_from_json` and released with the matching `*_free`.
//! Every fallible function returns a [`KwStatus`]; on failure the message is
//! kept per thread and can be copied out with [`kw_last_error_message`].
//! Panics are caught at the boundary and reported as `KW_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use kwdual::groups::FiniteGroup;
use kwdual::harmonic::{fourier_abelian, is_admissible, WeightFunction, ADMISSIBILITY_TOL};
use kwdual::homology::{coboundaries, cohomology};
use kwdual::ising::{kw_dual_check, Insertions, SumOptions};
use kwdual::surface::{generate_lattice, Lattice2, LatticeKind};
use kwdual::{Error, C64};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    CapExceeded = 4,
    NotAbelian = 5,
    NotABoundary = 6,
    InvalidLattice = 7,
    Internal = 8,
}

/// Lattice families accepted by [`kw_lattice_generate`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KwLatticeKind {
    /// `m × n` square torus.
    Torus = 0,
    /// Cube surface.
    SphereCube = 1,
    /// Tetrahedron surface.
    SphereTetra = 2,
    /// Closed surface of the given genus (at least 1).
    Genus = 3,
}

/// Opaque finite group.
pub struct KwGroup(FiniteGroup);

/// Opaque latticed surface.
pub struct KwLattice(Lattice2);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> KwStatus {
    match e {
        Error::CapExceeded { .. } => KwStatus::CapExceeded,
        Error::NotAbelian => KwStatus::NotAbelian,
        Error::NotABoundary { .. } => KwStatus::NotABoundary,
        Error::InvalidLattice(_) | Error::RequiresClosedSurface => KwStatus::InvalidLattice,
        Error::Overflow(_) | Error::DiagonalizationFailed { .. } => KwStatus::Internal,
        _ => KwStatus::InvalidInput,
    }
}

struct Failure(KwStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(KwStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> KwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            KwStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            KwStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(KwStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_out<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn weight(values: &[f64], group: &FiniteGroup) -> Result<WeightFunction, Failure> {
    if values.len() != group.order() {
        return Err(Failure(
            KwStatus::InvalidInput,
            format!(
                "{} weight values given, group has {} elements",
                values.len(),
                group.order()
            ),
        ));
    }
    Ok(WeightFunction::new(values.to_vec())?)
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes, excluding
/// the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn kw_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Parse a group descriptor such as `Z4`, `Z2xZ2` or `S3`.
///
/// # Safety
/// `desc` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kw_group_parse(desc: *const c_char, out: *mut *mut KwGroup) -> KwStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let g = FiniteGroup::parse(str_arg(desc, "desc")?)?;
        *out = Box::into_raw(Box::new(KwGroup(g)));
        Ok(())
    })
}

/// Order of a group.
///
/// # Safety
/// `group` must come from [`kw_group_parse`]; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn kw_group_order(group: *const KwGroup, out: *mut usize) -> KwStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(group, "group")?.0.order();
        Ok(())
    })
}

/// Release a group. Null is ignored.
///
/// # Safety
/// `group` must come from [`kw_group_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kw_group_free(group: *mut KwGroup) {
    if !group.is_null() {
        drop(Box::from_raw(group));
    }
}

/// Generate a lattice. `m`, `n` apply to tori and `genus` to higher genus.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kw_lattice_generate(
    kind: KwLatticeKind,
    m: usize,
    n: usize,
    genus: usize,
    out: *mut *mut KwLattice,
) -> KwStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let kind = match kind {
            KwLatticeKind::Torus => LatticeKind::Torus { m, n },
            KwLatticeKind::SphereCube => LatticeKind::SphereCube,
            KwLatticeKind::SphereTetra => LatticeKind::SphereTetra,
            KwLatticeKind::Genus => LatticeKind::Genus(genus),
        };
        *out = Box::into_raw(Box::new(KwLattice(generate_lattice(kind)?)));
        Ok(())
    })
}

/// Read a lattice from JSON text and validate it.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kw_lattice_from_json(json: *const c_char, out: *mut *mut KwLattice) -> KwStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let text = str_arg(json, "json")?;
        let l: Lattice2 = serde_json::from_str(text)
            .map_err(|e| Failure(KwStatus::InvalidInput, format!("{}:{}: {e}", e.line(), e.column())))?;
        *out = Box::into_raw(Box::new(KwLattice(l.validated()?)));
        Ok(())
    })
}

/// Vertex, edge and face counts.
///
/// # Safety
/// `lattice` must be a live handle; the outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn kw_lattice_counts(
    lattice: *const KwLattice,
    vertices: *mut usize,
    edges: *mut usize,
    faces: *mut usize,
) -> KwStatus {
    guard(|| {
        let l = &ref_arg(lattice, "lattice")?.0;
        *out_arg(vertices, "vertices")? = l.num_vertices();
        *out_arg(edges, "edges")? = l.num_edges();
        *out_arg(faces, "faces")? = l.num_faces();
        Ok(())
    })
}

/// Release a lattice. Null is ignored.
///
/// # Safety
/// `lattice` must be a live handle and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kw_lattice_free(lattice: *mut KwLattice) {
    if !lattice.is_null() {
        drop(Box::from_raw(lattice));
    }
}

/// Unitary Fourier transform of a complex function on an abelian group.
/// All four arrays hold `len` entries, which must equal the group order.
///
/// # Safety
/// Arrays must be valid for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn kw_fourier_abelian(
    group: *const KwGroup,
    re: *const f64,
    im: *const f64,
    len: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> KwStatus {
    guard(|| {
        let g = &ref_arg(group, "group")?.0;
        let a = g.as_abelian()?;
        if len != a.order() {
            return Err(Failure(
                KwStatus::InvalidInput,
                format!("length {len} differs from group order {}", a.order()),
            ));
        }
        let re = slice_arg(re, len, "re")?;
        let im = slice_arg(im, len, "im")?;
        let values: Vec<C64> = re.iter().zip(im).map(|(&x, &y)| C64::new(x, y)).collect();
        let t = fourier_abelian(&values, a)?;
        let out_re = slice_out(out_re, len, "out_re")?;
        let out_im = slice_out(out_im, len, "out_im")?;
        for (k, z) in t.iter().enumerate() {
            out_re[k] = z.re;
            out_im[k] = z.im;
        }
        Ok(())
    })
}

/// Whether a real weight is admissible (even, positive and with positive
/// transform).
///
/// # Safety
/// `theta` must hold `len` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn kw_is_admissible(
    group: *const KwGroup,
    theta: *const f64,
    len: usize,
    out: *mut bool,
) -> KwStatus {
    guard(|| {
        let g = &ref_arg(group, "group")?.0;
        let w = weight(slice_arg(theta, len, "theta")?, g)?;
        *out_arg(out, "out")? = is_admissible(&w, g, ADMISSIBILITY_TOL)?.admissible;
        Ok(())
    })
}

/// Kramers-Wannier comparison on a lattice for an abelian group, without
/// insertions. Writes the largest relative error and the predicted factor.
///
/// # Safety
/// Handles must be live, `theta` must hold `len` values and the outputs must
/// be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn kw_kw_check(
    lattice: *const KwLattice,
    group: *const KwGroup,
    theta: *const f64,
    len: usize,
    max_relative_error: *mut f64,
    factor: *mut f64,
) -> KwStatus {
    guard(|| {
        let l = &ref_arg(lattice, "lattice")?.0;
        let g = &ref_arg(group, "group")?.0;
        let a = g.as_abelian()?;
        let w = weight(slice_arg(theta, len, "theta")?, g)?;
        let r = kw_dual_check(l, a, &w, &Insertions::default(), &SumOptions::default())?;
        *out_arg(max_relative_error, "max_relative_error")? = r.max_relative_error;
        *out_arg(factor, "factor")? = r.factor;
        Ok(())
    })
}

/// Orders of the cohomology groups in degrees 0, 1 and 2 with coefficients
/// in an abelian group.
///
/// # Safety
/// Handles must be live and `orders` must hold three entries.
#[no_mangle]
pub unsafe extern "C" fn kw_cohomology_orders(
    lattice: *const KwLattice,
    group: *const KwGroup,
    orders: *mut u64,
) -> KwStatus {
    guard(|| {
        let l = &ref_arg(lattice, "lattice")?.0;
        let a = ref_arg(group, "group")?.0.as_abelian()?;
        let c = cohomology(&coboundaries(l, a))?;
        let out = slice_out(orders, 3, "orders")?;
        for (slot, &o) in out.iter_mut().zip(c.orders.iter()) {
            *slot = u64::try_from(o).map_err(|_| Failure(KwStatus::Internal, "cohomology order exceeds u64".into()))?;
        }
        Ok(())
    })
}
