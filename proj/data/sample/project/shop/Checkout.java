package shop;

public class Checkout {
    private final PaymentGateway gateway;

    public Checkout(PaymentGateway gateway) {
        this.gateway = gateway;
    }

    public Receipt pay(Customer customer) {
        Cart cart = customer.getCart();
        if (cart.isEmpty()) {
            throw new IllegalStateException("empty cart");
        }
        return gateway.charge(customer, cart.totalCents());
    }
}
