pub mod gradcheck;
pub mod images;
pub mod ssim_ref;
