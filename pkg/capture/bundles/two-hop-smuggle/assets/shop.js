// storefront boot script (inert in fixtures)
window.shop = { cart: [] };
